import numpy as np
import pytest

from ivxrobust import DgpSpec, Hypothesis, IvxConfig, PredictiveSample
from ivxrobust.model import validate


def make_sample(t=80, k=2, seed=0):
    rng = np.random.default_rng(seed)
    return PredictiveSample(y=rng.standard_normal(t), x=rng.standard_normal((t, k)))


class TestPredictiveSample:
    def test_one_dimensional_x_promoted(self):
        s = PredictiveSample(y=np.arange(5.0), x=np.arange(5.0))
        assert s.x.shape == (5, 1)
        assert s.k == 1
        assert s.nobs == 5

    def test_auto_labels(self):
        s = make_sample(k=3)
        assert s.labels == ["x1", "x2", "x3"]

    def test_explicit_labels_kept(self):
        s = PredictiveSample(y=np.arange(4.0), x=np.ones((4, 2)), labels=["a", "b"])
        assert s.labels == ["a", "b"]


class TestHypothesis:
    def test_joint_zero(self):
        h = Hypothesis.joint_zero(3)
        np.testing.assert_array_equal(h.r_matrix, np.eye(3))
        np.testing.assert_array_equal(h.r_value, np.zeros(3))
        assert h.n_restrictions == 3

    def test_marginal(self):
        h = Hypothesis.marginal(1, 4, side="left", value=0.5)
        np.testing.assert_array_equal(h.r_matrix, [[0.0, 1.0, 0.0, 0.0]])
        assert h.r_value[0] == 0.5
        assert h.side == "left"
        assert h.n_restrictions == 1

    def test_marginal_index_out_of_range(self):
        with pytest.raises(IndexError):
            Hypothesis.marginal(4, 4)


class TestIvxConfig:
    def test_default_cz_depends_on_k(self):
        r = IvxConfig().resolve(nobs=100, k=3)
        assert r.c_z == -7.0

    def test_rho_z_value(self):
        # T = 100, K = 1: rho_z = 1 - 5/100^0.95
        r = IvxConfig().resolve(nobs=100, k=1)
        np.testing.assert_allclose(r.rho_z, 1.0 - 5.0 / 100**0.95)
        np.testing.assert_allclose(r.rho_z, 0.9370537, atol=5e-8)

    def test_split_index_floor(self):
        assert IvxConfig().resolve(nobs=101, k=1).t0 == 50
        assert IvxConfig(lam=0.25).resolve(nobs=100, k=1).t0 == 25

    def test_as_dict_keys(self):
        d = IvxConfig().resolve(nobs=100, k=1).as_dict()
        assert set(d) == {"c_z", "delta", "lambda", "rho_z", "t0"}


class TestValidate:
    def test_clean_inputs(self):
        assert validate(make_sample(), Hypothesis.joint_zero(2), IvxConfig()) == []

    def test_shape_mismatch(self):
        s = PredictiveSample(y=np.arange(5.0), x=np.ones((6, 1)))
        tags = validate(s, Hypothesis.joint_zero(1), IvxConfig())
        assert any(t.startswith("shape_mismatch") for t in tags)

    def test_missing_values(self):
        s = make_sample()
        s.y[3] = np.nan
        tags = validate(s, Hypothesis.joint_zero(2), IvxConfig())
        assert any(t.startswith("missing_values") for t in tags)

    def test_too_short(self):
        s = make_sample(t=5, k=2)
        tags = validate(s, Hypothesis.joint_zero(2), IvxConfig())
        assert any(t.startswith("degrees_of_freedom") for t in tags)

    def test_constant_column(self):
        s = make_sample()
        s.x[:, 1] = 2.0
        tags = validate(s, Hypothesis.joint_zero(2), IvxConfig())
        assert any(t.startswith("zero_variance") for t in tags)

    def test_rank_deficient_restriction(self):
        h = Hypothesis(np.array([[1.0, 0.0], [2.0, 0.0]]), np.zeros(2))
        tags = validate(make_sample(), h, IvxConfig())
        assert any(t.startswith("rank_deficient") for t in tags)

    def test_more_restrictions_than_coefficients(self):
        h = Hypothesis(np.vstack([np.eye(2), [1.0, 1.0]]), np.zeros(3))
        tags = validate(make_sample(), h, IvxConfig())
        assert any(t.startswith("rank_deficient") for t in tags)

    def test_one_sided_needs_single_restriction(self):
        h = Hypothesis(np.eye(2), np.zeros(2), side="right")
        tags = validate(make_sample(), h, IvxConfig())
        assert any("side" in t for t in tags)

    def test_bad_side_label(self):
        h = Hypothesis.marginal(0, 2)
        h.side = "upper"
        tags = validate(make_sample(), h, IvxConfig())
        assert any(t.startswith("side_invalid") for t in tags)

    def test_config_errors(self):
        bad = [
            IvxConfig(c_z=1.0),
            IvxConfig(delta=1.2),
            IvxConfig(lam=0.0),
            IvxConfig(c_z=-500.0),  # rho_z falls out of (0, 1)
        ]
        for cfg in bad:
            tags = validate(make_sample(), Hypothesis.joint_zero(2), cfg)
            assert any(t.startswith("config") for t in tags), cfg


class TestDgpSpec:
    def test_rho_near_unit_root_scaling(self):
        spec = DgpSpec(nobs=200, c=np.array([-2.0]), gamma=np.array([1.0]),
                       beta=np.array([0.0]))
        np.testing.assert_allclose(spec.rho, [1.0 - 2.0 / 200])

    def test_rho_stationary_scaling(self):
        spec = DgpSpec(nobs=200, c=np.array([-0.5]), gamma=np.array([1.0]),
                       beta=np.array([0.0]), alpha=0.0)
        np.testing.assert_allclose(spec.rho, [0.5])

    def test_from_rho_round_trip(self):
        spec = DgpSpec.from_rho(np.array([0.98, 0.95]), nobs=300,
                                gamma=np.zeros(2), beta=np.zeros(2))
        np.testing.assert_allclose(spec.rho, [0.98, 0.95])
        assert spec.k == 2
