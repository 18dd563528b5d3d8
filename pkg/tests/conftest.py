"""Shared helpers: small grids and seeded random step functions."""

from __future__ import annotations

import numpy as np
import pytest

from twoweight.grid import DyadicGrid, StepFunction, Weight


@pytest.fixture
def grid8() -> DyadicGrid:
    """1-D window [0, 8) with unit cells."""
    return DyadicGrid(dimension=1, top_level=3, bottom_level=0)


@pytest.fixture
def grid_fine() -> DyadicGrid:
    """1-D window [0, 8) with 128 cells."""
    return DyadicGrid(dimension=1, top_level=3, bottom_level=-4)


@pytest.fixture
def grid_unit() -> DyadicGrid:
    """1-D window [0, 1) with 16 cells."""
    return DyadicGrid(dimension=1, top_level=0, bottom_level=-4)


def random_step(grid: DyadicGrid, rng: np.random.Generator, signed: bool = True) -> StepFunction:
    vals = rng.standard_normal(grid.shape)
    if not signed:
        vals = np.abs(vals)
    return StepFunction(grid, vals)


def random_weight(grid: DyadicGrid, rng: np.random.Generator) -> Weight:
    return Weight(grid, np.abs(rng.standard_normal(grid.shape)) + 0.01)
