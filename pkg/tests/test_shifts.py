"""Haar shifts, the dyadic Hilbert transform, truncations, and the kernel operator."""

from __future__ import annotations

import math
from dataclasses import replace
from itertools import combinations

import numpy as np
import pytest

from twoweight.grid import DyadicGrid, StepFunction, integral
from twoweight.shifts import (
    HaarFunction,
    HaarShiftSpec,
    ShiftTerm,
    TruncationWindow,
    czo_star,
    czo_star_at,
    dyadic_hilbert,
    haar_validate,
    hilbert_as_shift,
    random_shift,
    shift_apply,
    shift_truncated,
    shift_validate,
    spec_from_json,
    spec_to_json,
)

from conftest import random_step

SQRT2 = math.sqrt(2.0)


def haar_step(grid: DyadicGrid, cube) -> StepFunction:
    """The L2-normalized Haar function of a cube, rendered on cells."""
    left, right = cube.children()
    amp = 1.0 / math.sqrt(cube.measure)
    vals = np.zeros(grid.shape)
    vals[left.cell_slices()] = amp
    vals[right.cell_slices()] = -amp
    return StepFunction(grid, vals)


class TestHaarValidate:
    def test_plus_minus_valid(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-2)
        g = HaarFunction(grid.top_cube, 1, np.array([1.0, -1.0]))
        assert haar_validate(g).ok

    def test_half_indicator_valid(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-2)
        g = HaarFunction(grid.top_cube, 1, np.array([1.0, 0.0]))
        assert haar_validate(g).ok

    def test_sup_norm_flagged(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-2)
        g = HaarFunction(grid.top_cube, 1, np.array([2.0, -1.0]))
        report = haar_validate(g)
        assert not report.ok
        assert any("sup norm" in v for v in report.violations)

    def test_unresolvable_depth_flagged(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-1)
        g = HaarFunction(grid.top_cube, 2, np.ones(4))
        report = haar_validate(g)
        assert not report.ok and any("resolvable" in v for v in report.violations)


def test_haar_orthonormality():
    grid = DyadicGrid(dimension=1, top_level=2, bottom_level=-3)
    cubes = [
        c
        for c in grid.iter_cubes()
        if c.level >= grid.bottom_level + 1
    ]
    rendered = {c: haar_step(grid, c) for c in cubes}
    for a, b in combinations(cubes, 2):
        inner = integral(StepFunction(grid, rendered[a].values * rendered[b].values))
        assert inner == pytest.approx(0.0, abs=1e-13)
    for c in cubes:
        inner = integral(StepFunction(grid, rendered[c].values ** 2))
        assert inner == pytest.approx(1.0, abs=1e-13)


class TestDyadicHilbert:
    def test_haar_input(self):
        # the Haar profile on [0, 1) maps to the Haar functions of its halves
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-2)
        f = StepFunction(grid, np.array([1.0, 1.0, -1.0, -1.0]))
        out = dyadic_hilbert(f)
        expect = haar_step(grid, grid.cube(-1, (0,))) - haar_step(
            grid, grid.cube(-1, (1,))
        )
        assert np.allclose(out.values, expect.values, atol=1e-13)
        assert np.allclose(np.abs(out.values), SQRT2, atol=1e-13)

    def test_constant_annihilated_in_own_window(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-4)
        f = StepFunction.from_box(grid, 0.0, 1.0)
        assert not np.any(dyadic_hilbert(f).values)

    def test_indicator_in_larger_window(self):
        grid = DyadicGrid(dimension=1, top_level=1, bottom_level=-1)
        f = StepFunction.from_box(grid, 0.0, 1.0)
        out = dyadic_hilbert(f)
        expect = (1.0 / SQRT2) * (
            haar_step(grid, grid.cube(0, (0,))) - haar_step(grid, grid.cube(0, (1,)))
        )
        assert np.allclose(out.values, expect.values, atol=1e-13)

    def test_linearity(self):
        grid = DyadicGrid(dimension=1, top_level=1, bottom_level=-4)
        rng = np.random.default_rng(2)
        f, g = random_step(grid, rng), random_step(grid, rng)
        lhs = dyadic_hilbert(f + 3.0 * g)
        rhs = dyadic_hilbert(f) + 3.0 * dyadic_hilbert(g)
        assert np.allclose(lhs.values, rhs.values, atol=1e-12)

    def test_rejects_2d(self):
        grid = DyadicGrid(dimension=2, top_level=0, bottom_level=-2)
        with pytest.raises(ValueError, match="one-dimensional"):
            dyadic_hilbert(StepFunction.zeros(grid))


class TestHilbertAsShift:
    def test_complexity_and_validity(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-4)
        spec, gamma = hilbert_as_shift(grid)
        assert gamma == SQRT2
        assert (spec.m, spec.k) == (0, 1)
        assert spec.complexity == 1
        assert shift_validate(spec).ok
        for _, term in spec.iter_terms():
            assert haar_validate(term.input).ok and haar_validate(term.output).ok

    def test_identity_on_random_functions(self):
        grid = DyadicGrid(dimension=1, top_level=1, bottom_level=-5)
        spec, gamma = hilbert_as_shift(grid)
        rng = np.random.default_rng(8)
        for _ in range(50):
            f = random_step(grid, rng)
            lhs = dyadic_hilbert(f)
            rhs = gamma * shift_apply(spec, f)
            assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-12


class TestShiftApply:
    def test_zero_function(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-4)
        spec = random_shift(grid, 1, 1, seed=0)
        out = shift_apply(spec, StepFunction.zeros(grid))
        assert not np.any(out.values)

    def test_additivity_exact(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-4)
        spec = random_shift(grid, 1, 2, seed=1)
        rng = np.random.default_rng(3)
        f, g = random_step(grid, rng), random_step(grid, rng)
        lhs = shift_apply(spec, f + g)
        rhs = shift_apply(spec, f) + shift_apply(spec, g)
        assert np.allclose(lhs.values, rhs.values, atol=1e-12)

    def test_grid_mismatch(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-4)
        other = DyadicGrid(dimension=1, top_level=0, bottom_level=-3)
        spec = random_shift(grid, 0, 1, seed=2)
        with pytest.raises(ValueError, match="different grids"):
            shift_apply(spec, StepFunction.zeros(other))

    def test_gamma_scales_output(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-4)
        spec = random_shift(grid, 0, 1, seed=4)
        f = random_step(grid, np.random.default_rng(5))
        doubled = replace(spec, gamma=2.0)
        assert np.allclose(
            shift_apply(doubled, f).values, 2.0 * shift_apply(spec, f).values
        )


class TestRandomShift:
    def test_deterministic(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-5)
        a = spec_to_json(random_shift(grid, 2, 1, seed=42))
        b = spec_to_json(random_shift(grid, 2, 1, seed=42))
        assert a == b

    def test_valid_and_typed(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-5)
        for m, k in ((0, 0), (1, 0), (2, 3)):
            spec = random_shift(grid, m, k, seed=7)
            assert shift_validate(spec).ok
            assert spec.complexity == max(m, k)

    def test_martingale_like(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-5)
        spec = random_shift(grid, 0, 0, seed=9)
        assert spec.complexity == 0

    def test_mean_zero_flag(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-5)
        spec = random_shift(grid, 1, 1, seed=11, mean_zero=True)
        for _, term in spec.iter_terms():
            assert abs(term.input.values.sum()) < 1e-12
            assert abs(term.output.values.sum()) < 1e-12

    def test_insufficient_depth(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-2)
        with pytest.raises(ValueError, match="depth"):
            random_shift(grid, 3, 3, seed=0)


class TestShiftTruncated:
    def test_single_cube_spec(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-3)
        cube = grid.top_cube
        term = ShiftTerm(
            input=HaarFunction(cube, 1, np.array([1.0, -1.0])),
            output=HaarFunction(cube, 1, np.array([0.5, -0.5])),
        )
        spec = HaarShiftSpec(grid=grid, m=0, k=0, terms={cube: (term,)})
        f = random_step(grid, np.random.default_rng(1))
        trunc = shift_truncated(spec, f)
        single = shift_apply(spec, f)
        assert np.array_equal(trunc.values, np.abs(single.values))

    def test_dominates_full_sum(self):
        grid = DyadicGrid(dimension=1, top_level=1, bottom_level=-4)
        spec = random_shift(grid, 1, 1, seed=3)
        f = random_step(grid, np.random.default_rng(4))
        trunc = shift_truncated(spec, f)
        full = shift_apply(spec, f)
        assert np.all(trunc.values >= np.abs(full.values) - 1e-12)

    def test_dominates_every_window_partial(self):
        grid = DyadicGrid(dimension=1, top_level=1, bottom_level=-4)
        rng = np.random.default_rng(6)
        for seed in range(5):
            spec = random_shift(grid, 0, 2, seed=seed)
            f = random_step(grid, rng)
            trunc = shift_truncated(spec, f)
            for lo in range(grid.bottom_level, grid.top_level + 1):
                for hi in range(lo, grid.top_level + 1):
                    partial = shift_apply(spec, f, TruncationWindow(lo, hi))
                    assert np.all(trunc.values >= np.abs(partial.values) - 1e-12)

    def test_hilbert_haar_single_scale(self):
        grid = DyadicGrid(dimension=1, top_level=0, bottom_level=-2)
        spec, gamma = hilbert_as_shift(grid)
        carried = replace(spec, gamma=gamma)
        f = StepFunction(grid, np.array([1.0, 1.0, -1.0, -1.0]))
        trunc = shift_truncated(carried, f)
        assert np.allclose(trunc.values, np.abs(dyadic_hilbert(f).values), atol=1e-13)

    def test_window_validation(self):
        with pytest.raises(ValueError, match="empty"):
            TruncationWindow(2, 1)


class TestCzoStar:
    def test_log_value_at_two(self):
        grid = DyadicGrid(dimension=1, top_level=3, bottom_level=0)
        f = StepFunction.from_box(grid, 0.0, 1.0)
        assert czo_star_at(f, 2.0) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_zero(self):
        grid = DyadicGrid(dimension=1, top_level=2, bottom_level=-2)
        out = czo_star(StepFunction.zeros(grid))
        assert not np.any(out.values)

    def test_kernel_antisymmetry(self):
        grid = DyadicGrid(dimension=1, top_level=3, bottom_level=0)
        f = StepFunction.from_box(grid, 1.0, 2.0)
        assert czo_star_at(f, 0.0) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_sublinear(self):
        grid = DyadicGrid(dimension=1, top_level=2, bottom_level=-3)
        rng = np.random.default_rng(10)
        f, g = random_step(grid, rng), random_step(grid, rng)
        both = czo_star(f + g)
        split = czo_star(f).values + czo_star(g).values
        assert np.all(both.values <= split + 1e-10)

    def test_divergence_at_jump(self):
        grid = DyadicGrid(dimension=1, top_level=2, bottom_level=0)
        f = StepFunction.from_box(grid, 0.0, 1.0)
        assert czo_star_at(f, 1.0) == math.inf

    def test_midpoint_sampling(self):
        grid = DyadicGrid(dimension=1, top_level=2, bottom_level=-2)
        f = StepFunction.from_box(grid, 0.0, 1.0)
        out = czo_star(f)
        x = grid.cell_side * 8.5  # midpoint of cell 8
        assert out.value_at(x) == pytest.approx(czo_star_at(f, x), abs=1e-14)


def test_spec_serialization_round_trip(tmp_path):
    grid = DyadicGrid(dimension=1, top_level=1, bottom_level=-4)
    spec = random_shift(grid, 1, 2, seed=21, gamma=math.pi)
    path = tmp_path / "spec.json"
    spec_to_json(spec, path)
    back = spec_from_json(path)
    assert back.grid == spec.grid
    assert (back.m, back.k, back.gamma) == (spec.m, spec.k, spec.gamma)
    assert spec_to_json(back) == spec_to_json(spec)
    f = random_step(grid, np.random.default_rng(22))
    assert np.array_equal(shift_apply(back, f).values, shift_apply(spec, f).values)
