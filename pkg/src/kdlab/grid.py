"""1-D space-time discretization, profile containers, and tridiagonal linear algebra.

The spatial variable is log-productivity, truncated to a uniform grid
[x_min, x_max]; time runs on a uniform step from t0 to t_final.  Both PDE
solvers share the implicit-operator assembly and the banded solve defined
here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DomainError,
    GridMismatchError,
    NonFiniteError,
    SingularSystemError,
)


@dataclass(frozen=True)
class Grid1D:
    """Uniform space-time grid.

    dx and dt are derived: dx = (x_max - x_min)/(nx - 1) and
    dt = (t_final - t0)/nt.  A zero-duration grid (nt = 0) is allowed for
    single-slice computations; its dt is a 1.0 placeholder never used by a
    time stepper.
    """

    x_min: float
    x_max: float
    nx: int
    t0: float
    t_final: float
    nt: int

    def __post_init__(self) -> None:
        if self.nx < 8:
            raise DomainError(f"nx must be at least 8, got {self.nx}")
        if not self.x_max > self.x_min:
            raise DomainError("x_max must exceed x_min")
        if self.nt < 0:
            raise DomainError("nt must be non-negative")
        if self.t_final < self.t0:
            raise DomainError("t_final must not precede t0")
        if self.nt == 0 and self.t_final != self.t0:
            raise DomainError("nt = 0 requires t_final == t0")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dt(self) -> float:
        if self.nt == 0:
            return 1.0
        return (self.t_final - self.t0) / self.nt

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt + 1) if self.nt else np.array([self.t0])

    def time_at(self, j: int) -> float:
        return self.t0 + j * self.dt if self.nt else self.t0


def recommended_domain(kappa: float, alpha1: float, horizon: float) -> tuple[float, float]:
    """Suggest (x_min, x_max) so fronts and exponential tails stay resolved.

    The learning front travels at up to kappa + alpha1, and the
    exponentially weighted pay-off integral draws on mass moving at 2*kappa,
    so the right edge allows for whichever is faster, plus tail headroom.
    """
    speed = max(kappa + alpha1, 2.0 * kappa)
    return (-20.0, speed * horizon + 40.0)


class Profile:
    """Real-valued samples of one quantity on the nodes of a grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid1D, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.nx,):
            raise GridMismatchError(
                f"profile needs {grid.nx} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("profile values must be finite")
        self.grid = grid
        self.values = values

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def __eq__(self, other) -> bool:
        if not isinstance(other, Profile):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"Profile(nx={self.grid.nx}, range=[{self.values.min():g}, {self.values.max():g}])"


class SpaceTimeField:
    """nt + 1 time slices of nx nodal values (row j = time t0 + j*dt)."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid1D, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.nt + 1, grid.nx):
            raise GridMismatchError(
                f"field needs shape {(grid.nt + 1, grid.nx)}, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("field values must be finite")
        self.grid = grid
        self.values = values

    def profile_at(self, j: int) -> Profile:
        return Profile(self.grid, self.values[j])

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpaceTimeField):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"SpaceTimeField(nt={self.grid.nt}, nx={self.grid.nx})"


def interp_linear(prof: Profile, x) -> float | np.ndarray:
    """Piecewise-linear interpolation of a profile at x (scalar or array)."""
    xq = np.asarray(x, dtype=float)
    g = prof.grid
    if np.any(xq < g.x_min) or np.any(xq > g.x_max):
        raise DomainError(f"query outside [{g.x_min}, {g.x_max}]")
    out = np.interp(xq, g.x, prof.values)
    return float(out) if np.isscalar(x) or xq.ndim == 0 else out


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Solve the tridiagonal system A x = rhs.

    Row i of A is (lower[i], diag[i], upper[i]) acting on
    (x[i-1], x[i], x[i+1]); lower[0] and upper[-1] are ignored.  Backed by
    the LAPACK banded solver; raises SingularSystemError when the system
    has no unique solution.
    """
    lower = np.asarray(lower, dtype=float)
    diag = np.asarray(diag, dtype=float)
    upper = np.asarray(upper, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = diag.size
    if not (lower.size == upper.size == rhs.size == n):
        raise GridMismatchError("tridiagonal bands and rhs must share one length")
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    try:
        x = scipy.linalg.solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("banded solve produced non-finite values")
    return x


def implicit_operator(
    nx: int, dx: float, dt: float, kappa: float, drift: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bands of (I - dt*(kappa*D2 + drift*D+)) with identity boundary rows.

    D2 is the centered second difference; D+ the one-sided first difference
    (u[i+1]-u[i])/dx, the upwind choice for transport carrying information
    from the right.  drift must be >= 0 so the matrix stays an M-matrix.
    """
    if drift < 0:
        raise DomainError("drift must be non-negative for the upwind stencil")
    r = kappa * dt / dx**2
    a = drift * dt / dx
    lower = np.full(nx, -r)
    diag = np.full(nx, 1.0 + 2.0 * r + a)
    upper = np.full(nx, -r - a)
    # Dirichlet rows: value pinned by the rhs.
    diag[0] = diag[-1] = 1.0
    upper[0] = 0.0
    lower[-1] = 0.0
    return lower, diag, upper
