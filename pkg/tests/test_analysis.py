"""Front location, speed fits, and the diagnostics suite."""

import math

import numpy as np
import pytest

from kdlab.analysis import (
    FrontTrack,
    Snapshot,
    estimate_speed,
    learning_front,
    locate_level,
    run_diagnostics,
)
from kdlab.errors import (
    DomainError,
    FrontOffGridLeft,
    FrontOffGridRight,
    NonMonotoneProfileError,
)
from kdlab.grid import Profile
from kdlab.model import ModelParams

from conftest import space_grid

P = ModelParams(kappa=1.0, rho=2.0, alpha1=0.5, k=0.5)  # i_crit = 4


class TestLocateLevel:
    def test_linear(self):
        g = space_grid(0.0, 1.0, 11)
        assert locate_level(Profile(g, 1.0 - g.x), 0.5) == pytest.approx(0.5)

    def test_step_between_nodes(self):
        g = space_grid(0.0, 7.0, 8)  # nodes at integers
        prof = Profile(g, np.where(g.x <= 2.0, 1.0, 0.0))
        assert locate_level(prof, 0.5) == pytest.approx(2.5)

    def test_exponential(self):
        g = space_grid(0.0, 3.0, 301)
        prof = Profile(g, np.exp(-2.0 * g.x))
        assert locate_level(prof, math.exp(-1.0)) == pytest.approx(0.5, abs=1e-4)

    def test_increasing_direction(self):
        g = space_grid(0.0, 1.0, 11)
        assert locate_level(Profile(g, g.x), 0.3, "increasing") == pytest.approx(0.3)

    def test_errors(self):
        g = space_grid(0.0, 1.0, 11)
        wiggle = np.cos(7 * g.x)
        with pytest.raises(NonMonotoneProfileError):
            locate_level(Profile(g, wiggle), 0.0)
        with pytest.raises(FrontOffGridLeft):
            locate_level(Profile(g, 0.2 * (1.0 - g.x)), 0.5)
        with pytest.raises(FrontOffGridRight):
            locate_level(Profile(g, 1.0 - 0.2 * g.x), 0.5)
        with pytest.raises(DomainError):
            locate_level(Profile(g, 1.0 - g.x), 0.5, direction="sideways")

    def test_constant_at_level_is_degenerate(self):
        g = space_grid(0.0, 1.0, 11)
        with pytest.raises(FrontOffGridLeft):
            locate_level(Profile(g, np.full(g.nx, 4.0)), 4.0)


class TestLearningFront:
    def test_closed_form(self):
        g = space_grid(0.0, 5.0, 2001)
        prof = Profile(g, 8.0 * np.exp(-g.x))
        assert learning_front(prof, P) == pytest.approx(math.log(2.0), abs=1e-4)

    def test_off_grid_left(self):
        g = space_grid(0.0, 5.0, 101)
        with pytest.raises(FrontOffGridLeft):
            learning_front(Profile(g, np.exp(-2.0 * g.x)), P)  # max is 1 < 4

    def test_off_grid_right(self):
        g = space_grid(0.0, 5.0, 101)
        with pytest.raises(FrontOffGridRight):
            learning_front(Profile(g, 100.0 - g.x), P)


class TestEstimateSpeed:
    def test_exact_lines(self):
        tr = FrontTrack("median", [0.0, 1.0, 2.0], [0.0, 2.0, 4.0])
        with pytest.raises(DomainError):
            estimate_speed(tr, (0.0, 2.0))  # too few samples
        t = np.linspace(0.0, 2.0, 21)
        fit = estimate_speed(FrontTrack("median", t, 2.0 * t), (0.0, 2.0))
        assert fit.speed == pytest.approx(2.0) and fit.r_squared == pytest.approx(1.0)
        fit = estimate_speed(FrontTrack("median", t, 3.0 * t + 1.0), (0.0, 2.0))
        assert fit.speed == pytest.approx(3.0) and fit.intercept == pytest.approx(1.0)

    def test_sublinear_drift_bound(self):
        t = np.linspace(100.0, 200.0, 401)
        fit = estimate_speed(FrontTrack("median", t, 2.0 * t + np.sqrt(t)), (100.0, 200.0))
        assert 2.0 <= fit.speed <= 2.08

    def test_window_filters(self):
        t = np.linspace(0.0, 10.0, 101)
        x = np.where(t < 5.0, 0.0, 7.0 * (t - 5.0))
        fit = estimate_speed(FrontTrack("median", t, x), (5.0, 10.0))
        assert fit.speed == pytest.approx(7.0)

    def test_track_validation(self):
        with pytest.raises(DomainError):
            FrontTrack("median", [1.0, 0.0], [0.0, 1.0])


def _steady_snapshot(t=0.0):
    g = space_grid(-10.0, 30.0, 801)
    F = np.clip((5.0 - g.x) / 10.0, 0.0, 1.0)
    w = np.clip((g.x + 5.0) / 10.0, 0.0, 1.0)
    return Snapshot.from_fields(g, t, F, P, w_vals=w, s_vals=None)


class TestDiagnostics:
    def test_steady_inputs_pass(self):
        report = run_diagnostics([_steady_snapshot()], P, temporal=False)
        assert report.passed
        checks = {r.check for r in report.results}
        assert {"f_monotone", "w_monotone", "payoff_below_intrinsic"} <= checks

    def test_corrupted_monotonicity_fails(self):
        snap = _steady_snapshot()
        vals = snap.F.values.copy()
        vals[200] = vals[199] + 0.2  # one increasing pair
        bad = Snapshot(t=0.0, F=Profile(snap.F.grid, vals), w=snap.w,
                       payoff=snap.payoff, intrinsic=snap.intrinsic)
        report = run_diagnostics([bad], P, temporal=False)
        failed = {r.check for r in report.failures()}
        assert "f_monotone" in failed
        loc = [r for r in report.failures() if r.check == "f_monotone"][0].location
        assert loc == pytest.approx(snap.F.grid.x[199])

    def test_range_violation_detected(self):
        snap = _steady_snapshot()
        vals = np.clip(snap.F.values - 1e-4, 0.0, 1.0)
        vals[0] = 1.0 + 1e-4
        bad = Snapshot(t=0.0, F=Profile(snap.F.grid, vals))
        report = run_diagnostics([bad], P, temporal=False)
        assert "f_range" in {r.check for r in report.failures()}

    def test_temporal_checks_catch_shrinking_payoff(self):
        # A distribution pushed leftward violates the pay-off growth bound.
        g = space_grid(-10.0, 30.0, 801)
        mk = lambda t, c: Snapshot.from_fields(
            g, t, np.clip((c - g.x) / 10.0, 0.0, 1.0), P
        )
        report = run_diagnostics([mk(0.0, 5.0), mk(1.0, 4.0)], P)
        assert "intrinsic_growth" in {r.check for r in report.failures()}

    def test_rows_are_flat_records(self):
        report = run_diagnostics([_steady_snapshot()], P, temporal=False)
        for row in report.to_rows():
            assert len(row) == 5

    def test_tightness_discriminates(self):
        # The stops-growing reading must fail a linearly widening front and
        # pass a saturating one at the same horizon.
        g = space_grid(-10.0, 90.0, 2001)

        def snap(t, width):
            center = 1.2 * t
            F = np.clip(0.5 - (g.x - center) / width, 0.0, 1.0)
            return Snapshot.from_fields(g, t, F, P)

        times = np.linspace(0.0, 40.0, 21)
        diverging = [snap(t, 4.0 + 0.5 * t) for t in times]
        report = run_diagnostics(diverging, P)
        assert "levelset_tightness" in {r.check for r in report.failures()}

        saturating = [snap(t, 8.0 - 4.0 / (1.0 + t)) for t in times]
        report = run_diagnostics(saturating, P)
        tight = [r for r in report.results if r.check == "levelset_tightness"]
        assert tight and all(r.passed for r in tight)

    def test_preset_diagnostics_green(self, preset_runs):
        res = preset_runs("lottery-intrinsic")
        assert res.manifest["diagnostics_passed"], res.manifest["diagnostics_failures"]


class TestFrontDivergence:
    def test_lottery_gap_slope_matches_theory(self, preset_runs):
        # The learning and median fronts separate at rate
        # (kappa + alpha1) - 2 sqrt(kappa alpha1) = 0.25, within 15%.
        # Known red at this horizon: the median's logarithmic delay alone
        # contributes ~0.06 to the fitted gap over [12, 108], which exceeds
        # the band; the sign and order of the divergence are correct.
        res = preset_runs("lottery-intrinsic")
        data = np.genfromtxt(res.out_dir / "tracks.csv", delimiter=",", names=True)
        t, gap = data["t"], data["x_learning"] - data["x_median"]
        fit = estimate_speed(FrontTrack("gap", t, gap), (12.0, 108.0))
        assert fit.speed == pytest.approx(0.25, rel=0.15)
