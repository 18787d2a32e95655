"""Shared model primitives: parameters, dynamics, control sets, policies.

Goodwill follows dx = (-rho*x + u) dt + sigma(x, u) dw with
sigma(x, u) = sigma0 + sigma1*|x| + sigma2*u. Payoffs are discounted at
rate c in absolute time, so the terminal reward weight seen from time 0
is gamma = gamma0 * exp(-c*T); it is computed once and shared by every
solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ParamError, PolicyError

# slack used when checking control-set membership of simulated policies
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """All model constants. Construction never raises; run validate()."""

    rho: float
    c: float
    T: float
    sigma0: float = 0.0
    sigma1: float = 0.0
    sigma2: float = 0.0
    m: float = 1.0
    gamma0: float = 1.0
    x_init: float = 1.0
    gamma: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "gamma", self.gamma0 * math.exp(-self.c * self.T))


def validate(p: ModelParams) -> list[str]:
    """Return every violated parameter constraint, empty list when ok.

    Violations are plain constraint strings ("rho > 0") so callers can
    surface them verbatim.
    """
    out = []
    checks = [
        (p.rho > 0, "rho > 0"),
        (p.c >= 0, "c >= 0"),
        (p.T > 0, "T > 0"),
        (p.sigma0 >= 0, "sigma0 >= 0"),
        (p.sigma1 >= 0, "sigma1 >= 0"),
        (p.sigma2 >= 0, "sigma2 >= 0"),
        (p.m > 0, "m > 0"),
        (p.gamma0 > 0, "gamma0 > 0"),
        (p.x_init >= 0, "x_init >= 0"),
    ]
    for ok, msg in checks:
        if not ok:
            out.append(msg)
    for name in ("rho", "c", "T", "sigma0", "sigma1", "sigma2", "m", "gamma0", "x_init"):
        if not math.isfinite(getattr(p, name)):
            out.append("%s finite" % name)
    return out


def require(p: ModelParams) -> None:
    """Raise ParamError if validate() reports anything."""
    bad = validate(p)
    if bad:
        raise ParamError(bad)


def drift(x, u, p: ModelParams):
    return -p.rho * x + u


def diffusion(x, u, p: ModelParams):
    return p.sigma0 + p.sigma1 * np.abs(x) + p.sigma2 * u


@dataclass(frozen=True)
class ControlSet:
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ParamError("lower <= upper")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.upper)

    def contains(self, u, tol: float = MEMBERSHIP_TOL) -> bool:
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)):
            return False
        lo_ok = bool(np.all(u >= self.lower - tol))
        hi_ok = True if not self.bounded else bool(np.all(u <= self.upper + tol))
        return lo_ok and hi_ok

    def clip(self, u):
        return np.clip(u, self.lower, self.upper)


@dataclass(frozen=True)
class Policy:
    """Feedback rule (t, x) -> control value in the declared control set.

    fn must broadcast over x (the simulation engine evaluates whole
    blocks of paths at once). Policies with a finite validity window in
    t raise PolicyError when queried outside it.
    """

    kind: str
    fn: Callable
    control_set: ControlSet
    t_lo: Optional[float] = None
    t_hi: Optional[float] = None

    def __call__(self, t: float, x):
        if self.t_lo is not None:
            if t < self.t_lo - 1e-12 or t > self.t_hi + 1e-12:
                raise PolicyError(
                    "policy %r queried at t=%g outside [%g, %g]"
                    % (self.kind, t, self.t_lo, self.t_hi)
                )
        return self.fn(t, x)

    @staticmethod
    def constant(level: float, control_set: Optional[ControlSet] = None) -> "Policy":
        cs = control_set if control_set is not None else ControlSet(0.0, math.inf)
        lv = float(level)

        def fn(t, x):
            return np.full(np.shape(x), lv, dtype=float)

        return Policy("constant", fn, cs)

    @staticmethod
    def bang_bang(t_star: float, m: float, control_set: Optional[ControlSet] = None) -> "Policy":
        # off up to and including t_star, full rate strictly after
        cs = control_set if control_set is not None else ControlSet(0.0, m)
        ts, mm = float(t_star), float(m)

        def fn(t, x):
            level = mm if t > ts else 0.0
            return np.full(np.shape(x), level, dtype=float)

        return Policy("bang-bang", fn, cs)

    @staticmethod
    def linear_feedback(
        gain: Callable[[float], float],
        t_lo: float,
        t_hi: float,
        control_set: Optional[ControlSet] = None,
    ) -> "Policy":
        """u(t, x) = clip(gain(t) * x into the control set)."""
        cs = control_set if control_set is not None else ControlSet(0.0, math.inf)

        def fn(t, x):
            g = float(gain(t))
            return cs.clip(g * np.asarray(x, dtype=float))

        return Policy("linear-feedback", fn, cs, t_lo, t_hi)

    @staticmethod
    def from_table(
        t_nodes, u_nodes, control_set: Optional[ControlSet] = None
    ) -> "Policy":
        """Open-loop policy linearly interpolated from a (t, u) table."""
        t_nodes = np.asarray(t_nodes, dtype=float)
        u_nodes = np.asarray(u_nodes, dtype=float)
        if t_nodes.ndim != 1 or t_nodes.shape != u_nodes.shape or t_nodes.size < 2:
            raise ParamError("table needs matching 1-d t and u arrays, length >= 2")
        if np.any(np.diff(t_nodes) <= 0):
            raise ParamError("table t nodes strictly increasing")
        cs = control_set if control_set is not None else ControlSet(0.0, math.inf)

        def fn(t, x):
            level = float(np.interp(t, t_nodes, u_nodes))
            return np.full(np.shape(x), level, dtype=float)

        return Policy("grid-table", fn, cs, float(t_nodes[0]), float(t_nodes[-1]))
