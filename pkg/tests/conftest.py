"""Shared fixtures: small grid helpers and session-scoped preset runs.

The preset runs are expensive (seconds to ~half a minute), so each executes
at most once per session and is shared between the module tests and the
acceptance suite.
"""

from __future__ import annotations

import numpy as np
import pytest

from kdlab.grid import Grid1D, Profile
from kdlab.harness import preset_config, run


def space_grid(x_min: float, x_max: float, nx: int) -> Grid1D:
    """Grid with a degenerate time axis, for single-slice computations."""
    return Grid1D(x_min, x_max, nx, 0.0, 0.0, 0)


def monotone_pair(grid: Grid1D, rng: np.random.Generator) -> tuple[Profile, Profile]:
    """Random admissible pair: F non-increasing in [0,1], w non-decreasing."""
    f = np.sort(rng.random(grid.nx))[::-1]
    f = (f - f[-1]) / max(f[0] - f[-1], 1e-12)
    w = np.sort(rng.random(grid.nx))
    w = (w - w[0]) / max(w[-1] - w[0], 1e-12)
    return Profile(grid, f), Profile(grid, w)


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    """Run shipped presets lazily, once per session."""
    root = tmp_path_factory.mktemp("preset-runs")
    cache: dict[str, object] = {}

    def get(name: str):
        if name not in cache:
            cache[name] = run(preset_config(name), root / name)
        return cache[name]

    return get
