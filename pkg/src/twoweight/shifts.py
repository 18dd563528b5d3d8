"""Haar functions, generalized Haar shift operators, and truncations.

A Haar function here is any function supported in a cube, constant on its
depth-``d`` subcubes, with sup norm at most 1; no cancellation is required.
A shift of complexity type ``(m, k)`` pairs input Haar functions living on
depth-``m`` subcubes with output Haar functions on depth-``k`` subcubes,
normalized by the cube volume.  All sums run over window cubes only, which is
the finite-truncation reading used throughout the package.

The module also provides the dyadic Hilbert transform, its representation as
a complexity-1 shift, and a truncated singular integral with the 1-D Hilbert
kernel ``1/(x - y)`` as the one concrete non-dyadic operator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .grid import (
    DyadicCube,
    DyadicGrid,
    StepFunction,
    ValidationReport,
    integral,
    values_at,
)

__all__ = [
    "HaarFunction",
    "ShiftTerm",
    "HaarShiftSpec",
    "TruncationWindow",
    "haar_validate",
    "shift_validate",
    "shift_apply",
    "shift_truncated",
    "dyadic_hilbert",
    "hilbert_as_shift",
    "random_shift",
    "czo_star",
    "czo_star_at",
    "spec_to_json",
    "spec_from_json",
]


@dataclass(frozen=True, eq=False)
class HaarFunction:
    """Values on the depth-``d`` subcubes of a cube, zero outside the cube."""

    cube: DyadicCube
    depth: int
    values: np.ndarray  # shape (2**depth,) * dimension, relative subcube coords

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        n = self.cube.grid.dimension
        want = (1 << self.depth,) * n
        if arr.shape != want:
            raise ValueError(f"haar values shape {arr.shape}, expected {want}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def pairing(self, f: StepFunction) -> float:
        """Exact inner product ``integral(f * self)``."""
        sub_int = _block_integrals(f, self.cube, self.depth)
        return float((self.values * sub_int).sum())

    def add_to(self, out: np.ndarray, coefficient: float) -> None:
        """Accumulate ``coefficient * self`` onto a window cell array."""
        grid = self.cube.grid
        rep = 1 << (self.cube.level - self.depth - grid.bottom_level)
        block = self.values * coefficient
        for ax in range(grid.dimension):
            block = np.repeat(block, rep, axis=ax)
        out[self.cube.cell_slices()] += block


def _block_integrals(f: StepFunction, cube: DyadicCube, depth: int) -> np.ndarray:
    """Integrals of ``f`` over the depth-``depth`` subcubes of ``cube``."""
    grid = f.grid
    if cube.level - depth < grid.bottom_level:
        raise ValueError(
            f"depth-{depth} subcubes of a level-{cube.level} cube are not "
            f"resolvable at finest level {grid.bottom_level}"
        )
    block = f.values[cube.cell_slices()]
    per = 1 << depth
    sub = block.shape[0] // per
    shape = []
    for _ in range(grid.dimension):
        shape.extend((per, sub))
    axes = tuple(range(1, 2 * grid.dimension, 2))
    return block.reshape(shape).sum(axis=axes) * grid.cell_measure


def haar_validate(g: HaarFunction) -> ValidationReport:
    """Check the three Haar clauses: support, constancy, sup-norm bound.

    Support and constancy are structural in this representation; what can
    fail is resolvability of the depth (constancy would not be expressible on
    the grid) and the sup-norm bound.
    """
    violations = []
    grid = g.cube.grid
    if g.depth < 0:
        violations.append("depth must be nonnegative")
    if g.cube.level - g.depth < grid.bottom_level:
        violations.append(
            f"support/constancy not resolvable: level {g.cube.level} minus depth "
            f"{g.depth} falls below finest level {grid.bottom_level}"
        )
    if not g.cube.in_window:
        violations.append(f"support cube {g.cube} is not a window cube")
    if not np.all(np.isfinite(g.values)):
        violations.append("values must be finite")
    elif g.sup_norm > 1.0:
        violations.append(f"sup norm {g.sup_norm} exceeds 1")
    return ValidationReport(not violations, tuple(violations))


@dataclass(frozen=True, eq=False)
class ShiftTerm:
    """One (input cube, output cube) pair of a shift."""

    input: HaarFunction
    output: HaarFunction


@dataclass(frozen=True, eq=False)
class HaarShiftSpec:
    """A generalized Haar shift of complexity type ``(m, k)``.

    ``terms`` maps each participating window cube Q to its stored pairs;
    absent cubes and pairs contribute nothing.  ``gamma`` is a global scalar
    applied on top of the normalized double sum, so sup-norm-1 Haar data can
    represent operators whose natural coefficients exceed 1.
    """

    grid: DyadicGrid
    m: int
    k: int
    terms: Mapping[DyadicCube, tuple[ShiftTerm, ...]]
    gamma: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", dict(self.terms))

    @property
    def complexity(self) -> int:
        return max(self.m, self.k)

    def iter_terms(self) -> Iterator[tuple[DyadicCube, ShiftTerm]]:
        for cube, terms in self.terms.items():
            for term in terms:
                yield cube, term


def shift_validate(spec: HaarShiftSpec) -> ValidationReport:
    """Structural validation of a shift: memberships, Haar clauses, no duplicates."""
    violations = []
    if spec.m < 0 or spec.k < 0:
        violations.append("complexity type must be nonnegative")
    for cube, terms in spec.terms.items():
        if not cube.in_window:
            violations.append(f"{cube}: not a window cube")
        seen = set()
        for term in terms:
            qin, qout = term.input.cube, term.output.cube
            if qin.level != cube.level - spec.m or not cube.contains(qin):
                violations.append(f"{cube}: input cube {qin} not at depth {spec.m}")
            if qout.level != cube.level - spec.k or not cube.contains(qout):
                violations.append(f"{cube}: output cube {qout} not at depth {spec.k}")
            key = (qin.level, qin.coords, qout.level, qout.coords)
            if key in seen:
                violations.append(f"{cube}: duplicate pair {qin} -> {qout}")
            seen.add(key)
            for side, g in (("input", term.input), ("output", term.output)):
                rep = haar_validate(g)
                if not rep:
                    violations.append(f"{cube} {side}: " + "; ".join(rep.violations))
    return ValidationReport(not violations, tuple(violations))


@dataclass(frozen=True)
class TruncationWindow:
    """Levels to keep in a truncated shift sum: ``min_level <= level <= max_level``."""

    min_level: int
    max_level: int

    def __post_init__(self) -> None:
        if self.min_level > self.max_level:
            raise ValueError(
                f"truncation window [{self.min_level}, {self.max_level}] is empty"
            )

    def admits(self, level: int) -> bool:
        return self.min_level <= level <= self.max_level


def shift_apply(
    spec: HaarShiftSpec,
    f: StepFunction,
    window: TruncationWindow | None = None,
) -> StepFunction:
    """Evaluate the shift on ``f``, optionally keeping only a band of levels."""
    if f.grid != spec.grid:
        raise ValueError("shift spec and function live on different grids")
    out = np.zeros(spec.grid.shape)
    for cube, terms in spec.terms.items():
        if window is not None and not window.admits(cube.level):
            continue
        inv_measure = 1.0 / cube.measure
        for term in terms:
            coef = term.input.pairing(f) * inv_measure
            if coef != 0.0:
                term.output.add_to(out, coef)
    if spec.gamma != 1.0:
        out *= spec.gamma
    return StepFunction(spec.grid, out)


def shift_truncated(spec: HaarShiftSpec, f: StepFunction) -> StepFunction:
    """Pointwise supremum of |partial sums| over all level truncation windows.

    Per-level contributions are computed once; the finitely many windows are
    then differences of prefix sums, so the enumeration is exhaustive.
    """
    if f.grid != spec.grid:
        raise ValueError("shift spec and function live on different grids")
    grid = spec.grid
    lo, hi = grid.bottom_level, grid.top_level
    nlev = hi - lo + 1
    per_level = np.zeros((nlev,) + grid.shape)
    for cube, terms in spec.terms.items():
        inv_measure = 1.0 / cube.measure
        for term in terms:
            coef = term.input.pairing(f) * inv_measure
            if coef != 0.0:
                term.output.add_to(per_level[cube.level - lo], coef)
    prefix = np.concatenate(
        [np.zeros((1,) + grid.shape), np.cumsum(per_level, axis=0)], axis=0
    )
    out = np.zeros(grid.shape)
    for a in range(nlev):
        for b in range(a, nlev):
            partial = prefix[b + 1] - prefix[a]
            np.maximum(out, np.abs(partial), out=out)
    if spec.gamma != 1.0:
        out *= abs(spec.gamma)
    return StepFunction(grid, out)


# -- dyadic Hilbert transform -------------------------------------------------


def _hilbert_cubes(grid: DyadicGrid) -> Iterator[DyadicCube]:
    # output Haar data on the halves needs two levels of headroom
    for level in range(grid.bottom_level + 2, grid.top_level + 1):
        for j in range(1 << (grid.top_level - level)):
            yield grid.cube(level, (j,))


def dyadic_hilbert(f: StepFunction) -> StepFunction:
    """Send each Haar component on I to the Haar functions on its halves.

    The sum runs over window intervals whose grandchildren exist, so both the
    pairing and the output are exactly representable on the grid.
    """
    grid = f.grid
    if grid.dimension != 1:
        raise ValueError("the dyadic Hilbert transform is one-dimensional")
    if grid.depth < 2:
        raise ValueError("window too shallow: need at least two levels below the top")
    out = np.zeros(grid.shape)
    for cube in _hilbert_cubes(grid):
        left, right = cube.children()
        coef = (integral(f, left) - integral(f, right)) / math.sqrt(cube.measure)
        if coef == 0.0:
            continue
        for half, sign in ((left, 1.0), (right, -1.0)):
            amp = sign * coef / math.sqrt(half.measure)
            ll, lr = half.children()
            out[ll.cell_slices()] += amp
            out[lr.cell_slices()] -= amp
    return StepFunction(grid, out)


def hilbert_as_shift(grid: DyadicGrid) -> tuple[HaarShiftSpec, float]:
    """The dyadic Hilbert transform as a complexity-(0, 1) shift.

    Returns ``(spec, gamma)`` with unit-sup-norm Haar data and ``gamma`` such
    that ``gamma * shift_apply(spec, f)`` equals ``dyadic_hilbert(f)``; the
    scalar works out to ``sqrt(2)``.
    """
    if grid.dimension != 1:
        raise ValueError("the dyadic Hilbert transform is one-dimensional")
    if grid.depth < 2:
        raise ValueError("window too shallow: need at least two levels below the top")
    pm = np.array([1.0, -1.0])
    terms: dict[DyadicCube, tuple[ShiftTerm, ...]] = {}
    for cube in _hilbert_cubes(grid):
        left, right = cube.children()
        g_in = HaarFunction(cube, 1, pm)
        terms[cube] = (
            ShiftTerm(input=g_in, output=HaarFunction(left, 1, pm)),
            ShiftTerm(input=g_in, output=HaarFunction(right, 1, -pm)),
        )
    spec = HaarShiftSpec(grid=grid, m=0, k=1, terms=terms, gamma=1.0)
    return spec, math.sqrt(2.0)


def random_shift(
    grid: DyadicGrid,
    m: int,
    k: int,
    seed: int,
    cube_probability: float = 0.5,
    max_pairs_per_cube: int = 2,
    mean_zero: bool = False,
    gamma: float = 1.0,
) -> HaarShiftSpec:
    """Deterministic random shift instance of complexity type ``(m, k)``.

    Haar values are uniform in [-1, 1]; with ``mean_zero`` they are centered
    and rescaled back under sup norm 1 (depth-0 data is then excluded, since
    a mean-zero constant vanishes).
    """
    if m < 0 or k < 0:
        raise ValueError("complexity type must be nonnegative")
    need = max(m, k) + (1 if mean_zero else 0)
    if grid.depth < need + 1:
        raise ValueError(
            f"window depth {grid.depth} cannot host complexity type ({m}, {k})"
        )
    rng = np.random.default_rng(np.random.SeedSequence((seed, m, k)))
    n = grid.dimension

    def rand_haar(cube: DyadicCube) -> HaarFunction:
        headroom = cube.level - grid.bottom_level
        depth = int(rng.integers(1 if mean_zero else 0, min(headroom, 1) + 1))
        vals = rng.uniform(-1.0, 1.0, size=(1 << depth,) * n)
        if mean_zero:
            vals -= vals.mean()
        top = np.max(np.abs(vals))
        if top > 1.0:
            vals /= top
        return HaarFunction(cube, depth, vals)

    terms: dict[DyadicCube, tuple[ShiftTerm, ...]] = {}
    min_level = grid.bottom_level + max(m, k) + (1 if mean_zero else 0)
    for level in range(min_level, grid.top_level + 1):
        for coords in np.ndindex(*(1 << (grid.top_level - level),) * n):
            if rng.random() > cube_probability:
                continue
            cube = grid.cube(level, coords)
            ins = cube.descendants(m)
            outs = cube.descendants(k)
            count = int(rng.integers(1, max_pairs_per_cube + 1))
            pairs = set()
            cube_terms = []
            for _ in range(count):
                qi = ins[int(rng.integers(len(ins)))]
                qo = outs[int(rng.integers(len(outs)))]
                key = (qi.coords, qo.coords)
                if key in pairs:
                    continue
                pairs.add(key)
                cube_terms.append(ShiftTerm(input=rand_haar(qi), output=rand_haar(qo)))
            if cube_terms:
                terms[cube] = tuple(cube_terms)
    return HaarShiftSpec(grid=grid, m=m, k=k, terms=terms, gamma=gamma)


# -- truncated singular integral with the 1-D Hilbert kernel ------------------


def czo_star_at(f: StepFunction, x: float) -> float:
    """Truncated-kernel supremum ``sup |int_{eps<|x-y|<eps'} f(y)/(x-y) dy|``.

    The integral between consecutive candidate radii (distances from ``x`` to
    cell boundaries) has one-signed derivative in the radius, so restricting
    both radii to the candidate set is exact.  At a jump point of ``f`` the
    supremum genuinely diverges and ``inf`` is returned.
    """
    grid = f.grid
    if grid.dimension != 1:
        raise ValueError("the truncated kernel operator is one-dimensional")
    t = grid.shift[0]
    h = grid.cell_side
    edges = t + h * np.arange(grid.cells_per_axis + 1)
    dist = np.abs(x - edges)
    radii = np.unique(dist[dist > 0.0])
    if radii.size == 0:
        return 0.0

    # first annulus (0, radii[0]): divergent unless the two sides agree
    mid0 = radii[0] / 2.0
    if f.value_at(x - mid0) != f.value_at(x + mid0):
        return math.inf

    mids = (radii[:-1] + radii[1:]) / 2.0
    lefts = values_at(f, x - mids)
    rights = values_at(f, x + mids)
    increments = (lefts - rights) * np.log(radii[1:] / radii[:-1])
    partial = np.concatenate(([0.0], np.cumsum(increments)))
    return float(partial.max() - partial.min())


def czo_star(f: StepFunction) -> StepFunction:
    """Truncated-kernel supremum sampled at cell midpoints.

    The result is not a step function in general; the returned values are the
    pointwise suprema at midpoints, attached to their cells.
    """
    grid = f.grid
    if grid.dimension != 1:
        raise ValueError("the truncated kernel operator is one-dimensional")
    t = grid.shift[0]
    h = grid.cell_side
    mids = t + h * (np.arange(grid.cells_per_axis) + 0.5)
    vals = np.array([czo_star_at(f, float(x)) for x in mids])
    return StepFunction(grid, vals)


# -- serialization ------------------------------------------------------------


def _cube_to_obj(cube: DyadicCube) -> dict:
    return {"level": cube.level, "coords": list(cube.coords)}


def _haar_to_obj(g: HaarFunction) -> dict:
    return {
        "cube": _cube_to_obj(g.cube),
        "depth": g.depth,
        "values": g.values.ravel().tolist(),
    }


def _haar_from_obj(grid: DyadicGrid, obj: dict) -> HaarFunction:
    cube = grid.cube(obj["cube"]["level"], obj["cube"]["coords"])
    n = grid.dimension
    shape = (1 << obj["depth"],) * n
    vals = np.asarray(obj["values"], dtype=np.float64).reshape(shape)
    return HaarFunction(cube, obj["depth"], vals)


def _grid_to_obj(grid: DyadicGrid) -> dict:
    return {
        "dimension": grid.dimension,
        "shift": list(grid.shift),
        "top_level": grid.top_level,
        "bottom_level": grid.bottom_level,
    }


def grid_from_obj(obj: dict) -> DyadicGrid:
    return DyadicGrid(
        dimension=obj["dimension"],
        shift=tuple(obj["shift"]),
        top_level=obj["top_level"],
        bottom_level=obj["bottom_level"],
    )


def spec_to_json(spec: HaarShiftSpec, path: str | Path | None = None) -> str:
    """Serialize a shift spec; float values round-trip exactly via repr."""
    payload = {
        "kind": "haar-shift-spec",
        "grid": _grid_to_obj(spec.grid),
        "m": spec.m,
        "k": spec.k,
        "gamma": spec.gamma,
        "cubes": [
            {
                "cube": _cube_to_obj(cube),
                "terms": [
                    {
                        "input": _haar_to_obj(term.input),
                        "output": _haar_to_obj(term.output),
                    }
                    for term in terms
                ],
            }
            for cube, terms in sorted(
                spec.terms.items(), key=lambda kv: (kv[0].level, kv[0].coords)
            )
        ],
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text)
    return text


def spec_from_json(source: str | Path) -> HaarShiftSpec:
    text = Path(source).read_text() if isinstance(source, Path) else source
    obj = json.loads(text)
    if obj.get("kind") != "haar-shift-spec":
        raise ValueError("not a haar-shift-spec document")
    grid = grid_from_obj(obj["grid"])
    terms: dict[DyadicCube, tuple[ShiftTerm, ...]] = {}
    for entry in obj["cubes"]:
        cube = grid.cube(entry["cube"]["level"], entry["cube"]["coords"])
        terms[cube] = tuple(
            ShiftTerm(
                input=_haar_from_obj(grid, item["input"]),
                output=_haar_from_obj(grid, item["output"]),
            )
            for item in entry["terms"]
        )
    return HaarShiftSpec(
        grid=grid, m=obj["m"], k=obj["k"], terms=terms, gamma=obj["gamma"]
    )
