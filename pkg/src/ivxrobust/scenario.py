"""Scenario files: INI sections describing simulation designs.

Each section is one scenario.  Example::

    [sd_k5]
    t = 250
    alpha = 1.0
    rho = 0.996, 0.993, 1.0, 0.987, 0.967
    gamma = -3, 2, 1, 3, 1
    b_grid = 0.0, 0.04, 0.08
    test = joint
    reps = 2000
    seed = 7

Keys
----
t (required), alpha (default 1), exactly one of ``c`` / ``rho``,
``gamma`` (required, sets K), ``mu`` / ``garch`` / ``burn_in``
(DGP details, defaulted), exactly one of ``b_grid`` / ``beta``,
``beta_rule`` (joint | direct), ``test`` (``joint`` or
``marginal:i[:side]`` with 1-based i), ``reps``, ``seed``, ``level``,
and instrument overrides ``cz`` / ``delta`` / ``lambda``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .model import SIDES, DgpSpec, Hypothesis, IvxConfig

__all__ = ["Scenario", "parse_scenarios"]


@dataclass
class Scenario:
    """One parsed scenario; ``reps`` and ``seed`` stay None when unset."""

    name: str
    dgp: DgpSpec
    hyp: Hypothesis
    cfg: IvxConfig
    b_grid: list[float] | None
    beta: np.ndarray | None
    beta_rule: str
    level: float
    reps: int | None
    seed: int | None


def _floats(raw: str) -> list[float]:
    return [float(part) for part in raw.replace(",", " ").split()]


class _Section:
    """One INI section with typed access and unknown-key detection."""

    def __init__(self, name: str, items: dict[str, str]):
        self.name = name
        self.items = dict(items)
        self.seen: set[str] = set()

    def get(self, key: str, default=None) -> str | None:
        self.seen.add(key)
        raw = self.items.get(key)
        return raw if raw is not None else default

    def fail(self, message: str):
        raise ValidationError(f"scenario [{self.name}]: {message}")

    def number(self, key: str, kind, default=None):
        raw = self.get(key)
        if raw is None:
            return default
        try:
            return kind(raw)
        except ValueError:
            self.fail(f"{key} must be a number, got {raw!r}")

    def vector(self, key: str) -> list[float] | None:
        raw = self.get(key)
        if raw is None:
            return None
        try:
            return _floats(raw)
        except ValueError:
            self.fail(f"{key} must be a list of numbers, got {raw!r}")

    def finish(self):
        unknown = set(self.items) - self.seen
        if unknown:
            self.fail(f"unknown keys: {sorted(unknown)}")


def _parse_test(section: _Section, k: int) -> Hypothesis:
    raw = (section.get("test", "joint") or "joint").strip().lower()
    if raw == "joint":
        return Hypothesis.joint_zero(k)
    parts = raw.split(":")
    if parts[0] != "marginal" or len(parts) not in (2, 3):
        section.fail(f"test must be 'joint' or 'marginal:i[:side]', got {raw!r}")
    try:
        index = int(parts[1])
    except ValueError:
        section.fail(f"marginal index must be an integer, got {parts[1]!r}")
    if not 1 <= index <= k:
        section.fail(f"marginal index {index} outside 1..{k}")
    side = parts[2] if len(parts) == 3 else "two"
    if side not in SIDES:
        section.fail(f"side must be one of {SIDES}, got {side!r}")
    return Hypothesis.marginal(index - 1, k, side=side)


def _parse_one(name: str, items: dict[str, str]) -> Scenario:
    section = _Section(name, items)

    nobs = section.number("t", int)
    if nobs is None:
        section.fail("missing required key 't'")
    alpha = section.number("alpha", float, 1.0)
    gamma = section.vector("gamma")
    if gamma is None:
        section.fail("missing required key 'gamma'")
    k = len(gamma)

    c = section.vector("c")
    rho = section.vector("rho")
    if (c is None) == (rho is None):
        section.fail("exactly one of 'c' and 'rho' is required")
    if c is not None and len(c) != k:
        section.fail(f"c has {len(c)} entries but gamma has {k}")
    if rho is not None and len(rho) != k:
        section.fail(f"rho has {len(rho)} entries but gamma has {k}")

    garch = section.vector("garch") or [1.0, 0.1, 0.85]
    if len(garch) != 3:
        section.fail(f"garch needs exactly three values, got {len(garch)}")
    mu = section.number("mu", float, 1.0)
    burn_in = section.number("burn_in", int, 100)

    b_grid = section.vector("b_grid")
    beta = section.vector("beta")
    if (b_grid is None) == (beta is None):
        section.fail("exactly one of 'b_grid' and 'beta' is required")
    if beta is not None and len(beta) != k:
        section.fail(f"beta has {len(beta)} entries but gamma has {k}")
    beta_rule = (section.get("beta_rule", "joint") or "joint").strip().lower()
    if beta_rule not in ("joint", "direct"):
        section.fail(f"beta_rule must be 'joint' or 'direct', got {beta_rule!r}")

    hyp = _parse_test(section, k)

    level = section.number("level", float, 0.05)
    if not 0.0 < level <= 1.0:
        section.fail(f"level must lie in (0, 1], got {level}")
    reps = section.number("reps", int)
    if reps is not None and reps < 1:
        section.fail(f"reps must be >= 1, got {reps}")
    seed = section.number("seed", int)
    if seed is not None and seed < 0:
        section.fail(f"seed must be non-negative, got {seed}")

    cfg = IvxConfig(
        c_z=section.number("cz", float),
        delta=section.number("delta", float, 0.95),
        lam=section.number("lambda", float, 0.5),
    )

    placeholder = np.zeros(k) if beta is None else np.asarray(beta, dtype=float)
    kwargs = dict(
        nobs=nobs,
        gamma=np.asarray(gamma, dtype=float),
        beta=placeholder,
        alpha=alpha,
        mu=mu,
        phi0=garch[0],
        phi1=garch[1],
        phibar1=garch[2],
        burn_in=burn_in,
    )
    if c is not None:
        dgp = DgpSpec(c=np.asarray(c, dtype=float), **kwargs)
    else:
        dgp = DgpSpec.from_rho(np.asarray(rho, dtype=float), **kwargs)

    section.finish()
    return Scenario(
        name=name,
        dgp=dgp,
        hyp=hyp,
        cfg=cfg,
        b_grid=b_grid,
        beta=None if beta is None else np.asarray(beta, dtype=float),
        beta_rule=beta_rule,
        level=level,
        reps=reps,
        seed=seed,
    )


def parse_scenarios(path) -> list[Scenario]:
    """Parse every section of an INI scenario file, in file order."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"scenario file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with path.open() as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise ValidationError(f"scenario file {path}: {exc}") from exc
    if not parser.sections():
        raise ValidationError(f"scenario file {path} has no sections")
    return [_parse_one(name, dict(parser[name])) for name in parser.sections()]
