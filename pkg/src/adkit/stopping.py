"""Mixed control/stopping solver for the launch-timing problem.

State y follows dy = (mu - rho*y - u) dt + dw; the controller pays
gamma1*u^2 + gamma2 per unit time until it stops and collects y_tau^2.
Stopping is optimal at or below the free boundary x0. On the
continuation side the value function has the log-of-Gaussian-tail form

    v(x) = -2*gamma1*log(alpha2 * u2(x)),

where u2 solves 0.5*u2'' + (mu - rho*x)*u2' - rho*u2 = 0 and decays at
+infinity. The ratio gamma2/(2*gamma1) = rho is enforced exactly; it is
what makes the exponential transform linearize the continuation PDE.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfcx

from .errors import ParamError, SolverError, StableRangeError

SQRT_PI = math.sqrt(math.pi)
# |sqrt(rho)*(x - mu/rho)| <= W_STABLE keeps erfcx within 1e-12 relative
# error; below -W_STABLE the underlying exp(w^2) overflows
W_STABLE = 26.0
RESIDUAL_TOL = 1e-12
GAMMA2_RATIO_TOL = 1e-12


@dataclass(frozen=True)
class StoppingParams:
    """Launch-timing problem data; mu = rho*k is derived.

    gamma2 must equal 2*rho*gamma1 (checked to 1e-12 relative); the
    general-ratio problem needs a different special-function basis and
    is not handled here.
    """

    k: float
    rho: float
    gamma1: float
    gamma2: float
    mu: float = field(init=False)

    def __post_init__(self):
        bad = []
        for name in ("k", "rho", "gamma1", "gamma2"):
            if not math.isfinite(getattr(self, name)):
                bad.append("%s finite" % name)
        if not bad:
            if self.rho <= 0:
                bad.append("rho > 0")
            if self.gamma1 <= 1:
                bad.append("gamma1 > 1")
            if self.k < 0:
                bad.append("k >= 0")
            target = 2.0 * self.rho * self.gamma1
            if abs(self.gamma2 - target) > GAMMA2_RATIO_TOL * max(1.0, abs(self.gamma2)):
                bad.append("gamma2 = 2*rho*gamma1")
        if bad:
            raise ParamError(bad)
        object.__setattr__(self, "mu", self.rho * self.k)


def _scaled_arg(x, sp: StoppingParams):
    return math.sqrt(sp.rho) * (np.asarray(x, dtype=float) - sp.mu / sp.rho)


def u2(x, sp: StoppingParams):
    """Decaying solution of the homogeneous continuation ODE,
    normalized as exp(w^2) * integral_x^inf exp(-rho*(s - mu/rho)^2) ds
    with w = sqrt(rho)*(x - mu/rho); evaluated through the scaled
    complementary error function, so no overlarge intermediate appears.
    """
    w = _scaled_arg(x, sp)
    if np.any(w < -W_STABLE):
        raise StableRangeError(
            "u2 out of stable range: need sqrt(rho)*(x - mu/rho) >= -26, got %g"
            % float(np.min(w))
        )
    out = (SQRT_PI / (2.0 * math.sqrt(sp.rho))) * erfcx(w)
    if np.ndim(x) == 0:
        return float(out)
    return out


def u2_prime(x, sp: StoppingParams):
    # differentiating the defining integral: u2' = 2*rho*(x - mu/rho)*u2 - 1
    x_arr = np.asarray(x, dtype=float)
    out = 2.0 * sp.rho * (x_arr - sp.mu / sp.rho) * u2(x_arr, sp) - 1.0
    if np.ndim(x) == 0:
        return float(out)
    return out


def u2_second(x, sp: StoppingParams):
    x_arr = np.asarray(x, dtype=float)
    out = 2.0 * sp.rho * u2(x_arr, sp) + 2.0 * sp.rho * (
        x_arr - sp.mu / sp.rho
    ) * u2_prime(x_arr, sp)
    if np.ndim(x) == 0:
        return float(out)
    return out


def _fit_lhs(x, sp: StoppingParams):
    """Smooth-fit equation LHS minus one: root is the free boundary."""
    slope = 2.0 * sp.rho + 1.0 / sp.gamma1
    return (slope * x - 2.0 * sp.mu) * u2(x, sp) - 1.0


def _fit_lhs_prime(x, sp: StoppingParams):
    slope = 2.0 * sp.rho + 1.0 / sp.gamma1
    return slope * u2(x, sp) + (slope * x - 2.0 * sp.mu) * u2_prime(x, sp)


def free_boundary(sp: StoppingParams):
    """Bracket and solve the fit equation; returns (x0, alpha2).

    The point where the linear factor vanishes gives a guaranteed
    negative end; the positive end is found by geometric expansion from
    mu/rho, limited to u2's stable range. A sampled monotonicity check
    backs the uniqueness assumption before the root is accepted.
    """
    center = sp.mu / sp.rho
    sqrho = math.sqrt(sp.rho)
    slope = 2.0 * sp.rho + 1.0 / sp.gamma1
    lo = max(2.0 * sp.mu / slope, center - (W_STABLE - 0.1) / sqrho)
    if _fit_lhs(lo, sp) >= 0:
        raise SolverError("free boundary bracket: no negative end within stable range")
    b = 1.0 / sqrho
    b_max = (W_STABLE - 0.1) / sqrho
    hi = center + b
    while _fit_lhs(hi, sp) <= 0:
        b *= 2.0
        if b > b_max:
            raise SolverError(
                "free boundary bracket: no sign change over [mu/rho - B, mu/rho + B] "
                "within the u2 stable range"
            )
        hi = center + min(b, b_max)

    samples = _fit_lhs(np.linspace(lo, hi, 64), sp)
    if np.any(np.diff(samples) <= 0):
        raise SolverError("fit equation not increasing on the bracket; root may not be unique")

    x0 = brentq(lambda x: _fit_lhs(x, sp), lo, hi, xtol=1e-15, rtol=8.9e-16)
    for _ in range(3):
        r = _fit_lhs(x0, sp)
        if abs(r) <= RESIDUAL_TOL:
            break
        x0 = x0 - r / _fit_lhs_prime(x0, sp)
    if abs(_fit_lhs(x0, sp)) > RESIDUAL_TOL:
        raise SolverError("free boundary residual above 1e-12 after polish")
    alpha2 = math.exp(-x0 * x0 / (2.0 * sp.gamma1)) / u2(x0, sp)
    return float(x0), float(alpha2)


@dataclass(frozen=True)
class QviReport:
    """Worst-case residuals of the variational characterization on a
    verification grid. stop_side_max should be <= 0, pde_residual_max
    near zero, obstacle_gap_min >= 0, u_clamp_hits == 0."""

    stop_side_max: float
    pde_residual_max: float
    obstacle_gap_min: float
    u_clamp_hits: int
    x_grid: np.ndarray


@dataclass(frozen=True)
class StoppingSolution:
    params: StoppingParams
    x0: float
    alpha2: float
    value: Callable
    policy: Callable
    residual_report: Optional[QviReport]


def stopping_value(sol: StoppingSolution, sp: StoppingParams, x):
    """x^2 at and below the boundary, the log form above it."""
    x_arr = np.asarray(x, dtype=float)
    # clamp the u2 argument so stop-region queries never leave the
    # stable range; the where() discards those lanes anyway
    cont = -2.0 * sp.gamma1 * np.log(sol.alpha2 * u2(np.maximum(x_arr, sol.x0), sp))
    out = np.where(x_arr <= sol.x0, x_arr * x_arr, cont)
    if np.ndim(x) == 0:
        return float(out)
    return out


def stopping_policy(sol: StoppingSolution, sp: StoppingParams, y):
    """Feedback control: 1/u2(y) - 2*rho*(y - mu/rho) on the
    continuation side (boundary included, where it equals x0/gamma1),
    zero below. The max with 0 is defensive; it provably never binds."""
    y_arr = np.asarray(y, dtype=float)
    y_c = np.maximum(y_arr, sol.x0)
    raw = 1.0 / u2(y_c, sp) - 2.0 * sp.rho * (y_c - sp.mu / sp.rho)
    out = np.where(y_arr >= sol.x0, np.maximum(raw, 0.0), 0.0)
    if np.ndim(y) == 0:
        return float(out)
    return out


def qvi_residual(sol: StoppingSolution, sp: StoppingParams, grid) -> QviReport:
    """Checks the three pieces of the variational problem on a grid:
    the stop-region inequality, the continuation PDE residual, and the
    obstacle bound. Violations are reported, not raised."""
    x = np.asarray(grid, dtype=float)
    stop = x[x <= sol.x0]
    cont = x[x > sol.x0]

    if stop.size:
        expr = (
            (2.0 * sp.rho + 1.0 / sp.gamma1) * stop * stop
            - 2.0 * sp.mu * stop
            - (1.0 + sp.gamma2)
        )
        stop_side_max = float(np.max(expr))
    else:
        stop_side_max = -math.inf

    if cont.size:
        lin = 0.5 * u2_second(cont, sp) + (sp.mu - sp.rho * cont) * u2_prime(cont, sp)
        resid = -(2.0 * sp.gamma1 / u2(cont, sp)) * lin + sp.gamma2
        pde_residual_max = float(np.max(np.abs(resid)))
        raw = 1.0 / u2(cont, sp) - 2.0 * sp.rho * (cont - sp.mu / sp.rho)
        u_clamp_hits = int(np.count_nonzero(raw < 0))
    else:
        pde_residual_max = 0.0
        u_clamp_hits = 0

    gap = x * x - stopping_value(sol, sp, x)
    obstacle_gap_min = float(np.min(gap)) if x.size else math.inf

    return QviReport(
        stop_side_max=stop_side_max,
        pde_residual_max=pde_residual_max,
        obstacle_gap_min=obstacle_gap_min,
        u_clamp_hits=u_clamp_hits,
        x_grid=x,
    )


def solve_stopping(sp: StoppingParams, grid=None) -> StoppingSolution:
    """Free boundary, value, and policy, with the QVI report evaluated
    on `grid` (default: 2001 points from 0 to x0 + 10/sqrt(rho))."""
    x0, alpha2 = free_boundary(sp)

    sol = StoppingSolution(
        params=sp, x0=x0, alpha2=alpha2, value=None, policy=None, residual_report=None
    )

    def value(x):
        return stopping_value(sol, sp, x)

    def policy(y):
        return stopping_policy(sol, sp, y)

    sol = dataclasses.replace(sol, value=value, policy=policy)
    if grid is None:
        grid = np.linspace(0.0, x0 + 10.0 / math.sqrt(sp.rho), 2001)
    report = qvi_residual(sol, sp, grid)
    return dataclasses.replace(sol, residual_report=report)
