"""Forward-in-time solver for the agents' distribution function F.

F obeys F_t = kappa F_xx + c(t,x) F with the nonlocal growth rate
c(t,x) = integral over y <= x of alpha(s(t,y)) (-F_y) dy.  One step is IMEX:
diffusion implicit (backward Euler, tridiagonal), the bounded reaction c*F
explicit, boundary nodes pinned to F = 1 on the left and F = 0 on the right.

Three couplings are supported: a prescribed strategy field, the forward-only
closure that recomputes the intrinsic pay-off each step, and a constant
search rate (which reduces the equation to classical Fisher-KPP).  The local
rank-strategy reduction is exposed separately as solve_rank_local.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from . import model
from .errors import DomainError, GridMismatchError, NonFiniteError, NumericalError, OvershootError
from .grid import Grid1D, Profile, SpaceTimeField, implicit_operator, solve_tridiagonal

#: Allowed drift of F outside [0, 1] per step before the solver declares
#: instability; anything below is clamped as roundoff.
OVERSHOOT_TOL = 1e-9

#: Allowed positive discrete slope before monotonicity is declared broken.
SLOPE_TOL = 1e-9

INTRINSIC = "intrinsic-J"
CONSTANT_ALPHA = "constant-alpha"
PRESCRIBED = "prescribed-strategy"

StrategyInput = Union[SpaceTimeField, str]


@dataclass(frozen=True)
class ForwardConfig:
    """Coupling mode of a forward run; boundaries are always F=1 left, F=0 right."""

    coupling_mode: str = PRESCRIBED

    def __post_init__(self) -> None:
        if self.coupling_mode not in (PRESCRIBED, INTRINSIC, CONSTANT_ALPHA):
            raise DomainError(f"unknown coupling mode {self.coupling_mode!r}")


def dt_max(p: model.ModelParams) -> float:
    """Largest stable-and-accurate step: keeps the explicit reaction below 0.1."""
    return math.inf if p.alpha1 == 0.0 else 0.1 / p.alpha1


def _rate_from_alpha(F_vals: np.ndarray, alpha_vals: np.ndarray) -> np.ndarray:
    # Per-cell trapezoid of alpha against the measure -dF; telescopes exactly
    # for constant alpha, so c = alpha1 * (1 - F) holds to roundoff there.
    steps = 0.5 * (alpha_vals[:-1] + alpha_vals[1:]) * (F_vals[:-1] - F_vals[1:])
    c = np.empty_like(F_vals)
    c[0] = 0.0
    np.cumsum(steps, out=c[1:])
    return c


def nonlocal_rate(F: Profile, s_star: Profile, p: model.ModelParams) -> Profile:
    """Cumulative growth rate c(x) = integral over y <= x of alpha(s*) (-F_y) dy.

    Non-negative and non-decreasing for non-increasing F; bounded by
    alpha1 * (1 - F(x)) up to quadrature tolerance.
    """
    if F.grid != s_star.grid:
        raise GridMismatchError("F and s* live on different grids")
    s = np.clip(s_star.values, 0.0, 1.0)
    if np.any(np.abs(s - s_star.values) > 1e-9):
        raise DomainError("strategy values must lie in [0, 1]")
    return Profile(F.grid, _rate_from_alpha(F.values, model.alpha(s, p)))


def _imex_step(
    F_vals: np.ndarray, c_vals: np.ndarray, p: model.ModelParams, dt: float, dx: float
) -> np.ndarray:
    rhs = F_vals * (1.0 + dt * c_vals)
    rhs[0] = 1.0
    rhs[-1] = 0.0
    lower, diag, upper = implicit_operator(F_vals.size, dx, dt, p.kappa)
    out = solve_tridiagonal(lower, diag, upper, rhs)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("forward step produced non-finite values")
    if out.min() < -OVERSHOOT_TOL or out.max() > 1.0 + OVERSHOOT_TOL:
        raise OvershootError(
            f"F left [0,1] by {max(-out.min(), out.max() - 1.0):.3e} in one step"
        )
    return np.clip(out, 0.0, 1.0)


def step_forward(F: Profile, s_star: Profile, p: model.ModelParams, dt: float) -> Profile:
    """Advance F by one IMEX step under the given strategy slice."""
    if dt > dt_max(p):
        raise DomainError(f"dt={dt} exceeds dt_max={dt_max(p)}")
    c = nonlocal_rate(F, s_star, p)
    return Profile(F.grid, _imex_step(F.values.copy(), c.values, p, dt, F.grid.dx))


def _alpha_slice(
    F_vals: np.ndarray, strategy: StrategyInput, j: int, p: model.ModelParams, dx: float
) -> np.ndarray:
    """Search-rate values alpha(s(t_j, .)) for the step starting at slice j."""
    if isinstance(strategy, SpaceTimeField):
        return model.alpha(np.clip(strategy.values[j], 0.0, 1.0), p)
    if strategy == CONSTANT_ALPHA:
        return np.full_like(F_vals, p.alpha1)
    if strategy == INTRINSIC:
        J = model.discounted_tail(F_vals, dx, p.rho_minus_kappa)
        return model.alpha_of_sm(J, p)
    raise DomainError(f"unknown strategy input {strategy!r}")


def iter_forward(
    F0: Profile,
    strategy: StrategyInput,
    p: model.ModelParams,
    grid: Grid1D,
    check_monotone: bool = True,
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (slice index, F values) for j = 0 .. nt, stepping lazily.

    Consumers that keep slices should copy them; the buffers are not part of
    the contract.  Used by solve_forward and by the streaming experiment
    runner, which avoids holding a long trajectory in memory.
    """
    if F0.grid != grid:
        raise GridMismatchError("F0 does not live on the run grid")
    if isinstance(strategy, SpaceTimeField) and strategy.grid != grid:
        raise GridMismatchError("strategy field does not live on the run grid")
    if grid.nt > 0 and grid.dt > dt_max(p) * (1.0 + 1e-12):
        raise DomainError(f"grid dt={grid.dt} exceeds dt_max={dt_max(p)}")
    vals = F0.values.copy()
    if check_monotone and np.max(np.diff(vals), initial=-np.inf) > SLOPE_TOL:
        raise DomainError("F0 must be non-increasing")
    dx = grid.dx
    yield 0, vals
    for j in range(grid.nt):
        a = _alpha_slice(vals, strategy, j, p, dx)
        c = _rate_from_alpha(vals, a)
        vals = _imex_step(vals, c, p, grid.dt, dx)
        if check_monotone and np.max(np.diff(vals)) > SLOPE_TOL:
            raise NumericalError(f"F lost monotonicity at step {j + 1}")
        yield j + 1, vals


def solve_forward(
    F0: Profile,
    strategy: StrategyInput,
    p: model.ModelParams,
    grid: Grid1D,
) -> SpaceTimeField:
    """Run the forward equation over the whole grid and return the trajectory.

    strategy is either a SpaceTimeField of time fractions (sampled
    piecewise-constant over each step), or one of the mode names
    "intrinsic-J" / "constant-alpha".
    """
    out = np.empty((grid.nt + 1, grid.nx))
    for j, vals in iter_forward(F0, strategy, p, grid):
        out[j] = vals
    return SpaceTimeField(grid, out)


def solve_rank_local(F0: Profile, p: model.ModelParams, grid: Grid1D) -> SpaceTimeField:
    """Forward run with the rank strategy s = F, where the equation is local.

    The growth rate collapses to Q(1) - Q(F) with Q the antiderivative of
    alpha, evaluated in closed form; this is the mean-field counterpart of
    rank-proportional search and the cross-check target for the particle
    simulator.
    """
    if F0.grid != grid:
        raise GridMismatchError("F0 does not live on the run grid")
    if grid.nt > 0 and grid.dt > dt_max(p) * (1.0 + 1e-12):
        raise DomainError(f"grid dt={grid.dt} exceeds dt_max={dt_max(p)}")
    vals = F0.values.copy()
    if np.max(np.diff(vals), initial=-np.inf) > SLOPE_TOL:
        raise DomainError("F0 must be non-increasing")
    q1 = model.q_integral(1.0, p)
    out = np.empty((grid.nt + 1, grid.nx))
    out[0] = vals
    for j in range(grid.nt):
        c = q1 - model.q_integral(vals, p)
        vals = _imex_step(vals, c, p, grid.dt, grid.dx)
        if np.max(np.diff(vals)) > SLOPE_TOL:
            raise NumericalError(f"F lost monotonicity at step {j + 1}")
        out[j + 1] = vals
    return SpaceTimeField(grid, out)
