"""Grids, profiles, interpolation, and the tridiagonal solver."""

import numpy as np
import pytest

from kdlab.errors import DomainError, GridMismatchError, SingularSystemError
from kdlab.grid import (
    Grid1D,
    Profile,
    implicit_operator,
    interp_linear,
    recommended_domain,
    solve_tridiagonal,
)

from conftest import space_grid


class TestGrid:
    def test_spacing_invariants(self):
        g = Grid1D(-20.0, 160.0, 3601, 0.0, 60.0, 6000)
        assert g.dx == pytest.approx((g.x_max - g.x_min) / (g.nx - 1), abs=0)
        assert abs(g.nt * g.dt - (g.t_final - g.t0)) <= 1e-12 * max(1.0, g.t_final - g.t0)
        assert g.x.shape == (3601,)
        assert g.times.shape == (6001,)

    def test_validation(self):
        with pytest.raises(DomainError):
            Grid1D(0.0, 1.0, 4, 0.0, 1.0, 10)  # nx too small
        with pytest.raises(DomainError):
            Grid1D(1.0, 0.0, 16, 0.0, 1.0, 10)
        with pytest.raises(DomainError):
            Grid1D(0.0, 1.0, 16, 0.0, 1.0, 0)  # nt=0 needs t0 == t_final

    def test_zero_duration(self):
        g = space_grid(0.0, 1.0, 16)
        assert g.nt == 0 and g.times.tolist() == [0.0]

    def test_recommended_domain(self):
        x_min, x_max = recommended_domain(kappa=1.0, alpha1=0.25, horizon=120.0)
        assert x_min <= -20.0
        assert x_max >= (1.0 + 0.25) * 120.0 + 40.0


class TestProfile:
    def test_shape_and_finite(self):
        g = space_grid(0.0, 1.0, 16)
        with pytest.raises(GridMismatchError):
            Profile(g, np.zeros(8))
        prof = Profile(g, np.linspace(1, 0, 16))
        assert prof == Profile(g, np.linspace(1, 0, 16))


class TestInterp:
    def test_examples(self):
        g = space_grid(0.0, 1.0, 11)
        prof = Profile(g, 1.0 - g.x)
        assert interp_linear(prof, 0.5) == pytest.approx(0.5)
        assert interp_linear(prof, 0.3) == pytest.approx(0.7)
        assert interp_linear(prof, g.x[4]) == pytest.approx(prof.values[4])
        two = Profile(g, np.r_[0.0, np.ones(10)])
        assert interp_linear(two, g.dx / 2) == pytest.approx(0.5)

    def test_domain_error(self):
        g = space_grid(0.0, 1.0, 11)
        prof = Profile(g, g.x)
        with pytest.raises(DomainError):
            interp_linear(prof, -0.1)
        with pytest.raises(DomainError):
            interp_linear(prof, 1.1)

    def test_monotone_preserving(self):
        g = space_grid(0.0, 1.0, 33)
        rng = np.random.default_rng(3)
        prof = Profile(g, np.sort(rng.random(g.nx))[::-1])
        q = np.sort(rng.random(200))
        vals = interp_linear(prof, q)
        assert np.all(np.diff(vals) <= 1e-15)


def _dense_eliminate(lower, diag, upper, rhs):
    """Hand-rolled Gaussian elimination with partial pivoting (test oracle)."""
    n = len(diag)
    A = np.zeros((n, n))
    for i in range(n):
        A[i, i] = diag[i]
        if i > 0:
            A[i, i - 1] = lower[i]
        if i < n - 1:
            A[i, i + 1] = upper[i]
    b = np.array(rhs, dtype=float)
    for col in range(n):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        if A[piv, col] == 0.0:
            raise ZeroDivisionError
        A[[col, piv]] = A[[piv, col]]
        b[[col, piv]] = b[[piv, col]]
        for row in range(col + 1, n):
            m = A[row, col] / A[col, col]
            if m != 0.0:
                A[row, col:] -= m * A[col, col:]
                b[row] -= m * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - A[row, row + 1:] @ x[row + 1:]) / A[row, row]
    return x


class TestTridiagonal:
    def test_identity(self):
        rhs = np.array([3.0, -1.0, 2.0, 7.0])
        out = solve_tridiagonal(np.zeros(4), np.ones(4), np.zeros(4), rhs)
        assert np.allclose(out, rhs, atol=0)

    def test_discrete_laplacian(self):
        out = solve_tridiagonal(
            np.array([0.0, -1.0, -1.0]),
            np.array([2.0, 2.0, 2.0]),
            np.array([-1.0, -1.0, 0.0]),
            np.array([1.0, 0.0, 1.0]),
        )
        assert out == pytest.approx([1.0, 1.0, 1.0])

    def test_against_dense_elimination(self):
        rng = np.random.default_rng(11)
        for n in range(3, 17):
            for _ in range(5):
                lower = rng.uniform(-1, 1, n)
                upper = rng.uniform(-1, 1, n)
                diag = np.abs(lower) + np.abs(upper) + rng.uniform(0.5, 2.0, n)
                diag *= rng.choice([-1.0, 1.0], n)
                rhs = rng.uniform(-5, 5, n)
                lower[0] = upper[-1] = 0.0
                x = solve_tridiagonal(lower, diag, upper, rhs)
                ref = _dense_eliminate(lower, diag, upper, rhs)
                assert np.max(np.abs(x - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))
                # residual contract
                res = diag * x
                res[1:] += lower[1:] * x[:-1]
                res[:-1] += upper[:-1] * x[1:]
                assert np.max(np.abs(res - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))

    def test_singular(self):
        with pytest.raises(SingularSystemError):
            solve_tridiagonal(
                np.array([0.0, 1.0]), np.array([1.0, 1.0]), np.array([1.0, 0.0]),
                np.array([1.0, 2.0]),
            )

    def test_shape_mismatch(self):
        with pytest.raises(GridMismatchError):
            solve_tridiagonal(np.zeros(3), np.ones(4), np.zeros(4), np.ones(4))


class TestImplicitOperator:
    def test_m_matrix_shape(self):
        lower, diag, upper = implicit_operator(16, 0.1, 0.01, kappa=1.0, drift=2.0)
        assert diag[0] == 1.0 and diag[-1] == 1.0 and upper[0] == 0.0 and lower[-1] == 0.0
        assert np.all(diag[1:-1] > 0) and np.all(lower[1:-1] <= 0) and np.all(upper[1:-1] <= 0)
        # row sums of the interior equal 1 + dt*drift/dx boundary terms aside
        with pytest.raises(DomainError):
            implicit_operator(16, 0.1, 0.01, kappa=1.0, drift=-1.0)
