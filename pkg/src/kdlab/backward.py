"""Backward-in-time solver for the propensity-to-learn field w.

w solves w_t + kappa w_xx + 2 kappa w_x + (rho-kappa)(1 - s - w)
- alpha(s) w F = 0 from a terminal condition at t_final down to t0, where
s is the optimal allocation field of the current outer iterate.  In the
backward time variable this is a well-posed advection-diffusion-reaction
equation; one step treats kappa w_xx + 2 kappa w_x implicitly (first-order
term upwinded toward the side information comes from) and the source terms
explicitly.  Boundaries are pinned to w = 0 on the left and w = 1 on the
right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .errors import DomainError, GridMismatchError, NonFiniteError, NumericalError, OvershootError
from .grid import Grid1D, Profile, SpaceTimeField, implicit_operator, solve_tridiagonal

OVERSHOOT_TOL = 1e-9
SLOPE_TOL = 1e-9


@dataclass(frozen=True)
class TerminalCondition:
    """Terminal data for w: a logistic ramp or an explicit profile.

    The built profile must be non-decreasing with values within 1e-6 of 0 at
    the left edge and 1 at the right edge.
    """

    kind: str = "logistic"
    center: float = 0.0
    slope: float = 1.0
    profile: Profile | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("logistic", "custom"):
            raise DomainError(f"unknown terminal kind {self.kind!r}")
        if self.kind == "logistic" and not self.slope > 0:
            raise DomainError("logistic slope must be positive")
        if self.kind == "custom" and self.profile is None:
            raise DomainError("custom terminal condition needs a profile")

    def build(self, grid: Grid1D) -> np.ndarray:
        if self.kind == "logistic":
            z = np.clip(self.slope * (grid.x - self.center), -700.0, 700.0)
            vals = 1.0 / (1.0 + np.exp(-z))
        else:
            if self.profile.grid != grid:
                raise GridMismatchError("terminal profile does not live on the run grid")
            vals = self.profile.values.copy()
        if np.min(np.diff(vals)) < -SLOPE_TOL:
            raise DomainError("terminal condition must be non-decreasing")
        if vals[0] > 1e-6 or vals[-1] < 1.0 - 1e-6:
            raise DomainError("terminal condition must run from ~0 on the left to ~1 on the right")
        return vals


def dt_max_backward(p: model.ModelParams) -> float:
    """Step bound keeping the explicit source a contraction on [0, 1]."""
    return 1.0 / (p.rho_minus_kappa + p.alpha1)


def _step_from_strategy(
    w_vals: np.ndarray,
    F_vals: np.ndarray,
    s_vals: np.ndarray,
    p: model.ModelParams,
    dt: float,
    dx: float,
) -> np.ndarray:
    source = p.rho_minus_kappa * (1.0 - s_vals - w_vals) - model.alpha(s_vals, p) * w_vals * F_vals
    rhs = w_vals + dt * source
    rhs[0] = 0.0
    rhs[-1] = 1.0
    lower, diag, upper = implicit_operator(w_vals.size, dx, dt, p.kappa, drift=2.0 * p.kappa)
    out = solve_tridiagonal(lower, diag, upper, rhs)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("backward step produced non-finite values")
    if out.min() < -OVERSHOOT_TOL or out.max() > 1.0 + OVERSHOOT_TOL:
        raise OvershootError(
            f"w left [0,1] by {max(-out.min(), out.max() - 1.0):.3e} in one step"
        )
    return np.clip(out, 0.0, 1.0)


def step_backward(
    w: Profile, F: Profile, payoff: Profile, p: model.ModelParams, dt: float
) -> Profile:
    """Integrate w one step backward, from time t to t - dt.

    The allocation is recomputed from the pay-off profile; the coupled-loop
    driver below instead receives allocations directly so the two halves of
    the fixed-point iteration see the same strategy.
    """
    if not (w.grid == F.grid == payoff.grid):
        raise GridMismatchError("w, F, and pay-off must share one grid")
    if dt > dt_max_backward(p) * (1.0 + 1e-12):
        raise DomainError(f"dt={dt} exceeds the backward source bound {dt_max_backward(p)}")
    s_vals = model.s_m(payoff.values, p)
    return Profile(
        w.grid, _step_from_strategy(w.values.copy(), F.values, s_vals, p, dt, w.grid.dx)
    )


def solve_backward(
    wT: TerminalCondition | Profile,
    F_field: SpaceTimeField,
    strategy_field: SpaceTimeField,
    p: model.ModelParams,
    grid: Grid1D,
) -> SpaceTimeField:
    """Fill the w trajectory from the terminal slice down to t0.

    strategy_field holds the allocation values s of the current outer
    iterate; they are consumed as given, not recomputed here.  Every slice
    stays in [0, 1] and, for a monotone terminal condition, non-decreasing in
    x within the slope tolerance.
    """
    if F_field.grid != grid or strategy_field.grid != grid:
        raise GridMismatchError("fields do not live on the run grid")
    if grid.nt > 0 and grid.dt > dt_max_backward(p) * (1.0 + 1e-12):
        raise DomainError(
            f"grid dt={grid.dt} exceeds the backward source bound {dt_max_backward(p)}"
        )
    if isinstance(wT, Profile):
        wT = TerminalCondition(kind="custom", profile=wT)
    vals = wT.build(grid)
    terminal_monotone = np.min(np.diff(vals), initial=np.inf) >= -SLOPE_TOL
    out = np.empty((grid.nt + 1, grid.nx))
    out[grid.nt] = vals
    for j in range(grid.nt, 0, -1):
        vals = _step_from_strategy(
            vals.copy(), F_field.values[j], np.clip(strategy_field.values[j], 0.0, 1.0),
            p, grid.dt, grid.dx,
        )
        if terminal_monotone and np.min(np.diff(vals)) < -SLOPE_TOL:
            raise NumericalError(f"w lost monotonicity at slice {j - 1}")
        out[j - 1] = vals
    return SpaceTimeField(grid, out)
