"""Dyadic grids, cubes, and step functions with weighted norms.

All computation lives on a bounded window: the cube of side ``2**top_level``
anchored at the grid shift, tiled into cells of side ``2**bottom_level``.
Step functions are arrays indexed by those cells and vanish outside the
window, so every integral, average, and norm in the package is a finite sum.

Cubes are identified by ``(level, coords)`` with integer coordinates, and all
geometry (containment, nesting, tiling) is integer arithmetic, hence exact.
The cube with side ``2**level`` and coordinates ``j`` has lower corner
``shift + 2**level * j``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "DyadicGrid",
    "DyadicCube",
    "StepFunction",
    "Weight",
    "ExponentPair",
    "WeightPair",
    "ValidationReport",
    "average",
    "integral",
    "lp_norm",
    "weak_lq_norm",
    "dual_exponents",
    "values_at",
    "step_to_csv",
    "step_from_csv",
]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a structural validation, one entry per violated clause."""

    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class DyadicGrid:
    """A translated dyadic grid restricted to a bounded window.

    The window is the single cube of side ``2**top_level`` with coordinates
    zero; its cells are the cubes at ``bottom_level``.  Cubes above
    ``top_level`` may still be formed (as ancestors of the window) but carry
    no cell data of their own.
    """

    dimension: int = 1
    shift: tuple[float, ...] = ()
    top_level: int = 0
    bottom_level: int = -6

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        shift = tuple(float(s) for s in self.shift)
        if not shift:
            shift = (0.0,) * self.dimension
        if len(shift) != self.dimension:
            raise ValueError(
                f"shift has {len(shift)} entries for dimension {self.dimension}"
            )
        if any(not math.isfinite(s) for s in shift):
            raise ValueError("shift entries must be finite")
        object.__setattr__(self, "shift", shift)
        if self.bottom_level > self.top_level:
            raise ValueError(
                f"bottom_level {self.bottom_level} exceeds top_level {self.top_level}"
            )

    # -- window geometry -------------------------------------------------

    @property
    def depth(self) -> int:
        return self.top_level - self.bottom_level

    @property
    def cells_per_axis(self) -> int:
        return 1 << self.depth

    @property
    def cell_count(self) -> int:
        return self.cells_per_axis ** self.dimension

    @property
    def cell_side(self) -> float:
        return 2.0 ** self.bottom_level

    @property
    def cell_measure(self) -> float:
        return 2.0 ** (self.bottom_level * self.dimension)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells_per_axis,) * self.dimension

    @property
    def levels(self) -> range:
        return range(self.bottom_level, self.top_level + 1)

    # -- cube constructors -----------------------------------------------

    def cube(self, level: int, coords: Sequence[int]) -> "DyadicCube":
        return DyadicCube(self, level, tuple(int(c) for c in coords))

    def cell(self, coords: Sequence[int]) -> "DyadicCube":
        return self.cube(self.bottom_level, coords)

    @property
    def top_cube(self) -> "DyadicCube":
        return self.cube(self.top_level, (0,) * self.dimension)

    def iter_cubes(self, level: int | None = None) -> Iterator["DyadicCube"]:
        """Every window cube at ``level``, or at all window levels."""
        levels = self.levels if level is None else (level,)
        for lv in levels:
            per_axis = 1 << (self.top_level - lv)
            for coords in product(range(per_axis), repeat=self.dimension):
                yield DyadicCube(self, lv, coords)

    def cube_count(self) -> int:
        return sum(
            (1 << (self.dimension * (self.top_level - lv))) for lv in self.levels
        )

    def cell_index(self, point: Sequence[float]) -> tuple[int, ...] | None:
        """Cell coordinates containing ``point``, or None outside the window."""
        idx = []
        n = self.cells_per_axis
        for t, x in zip(self.shift, point):
            c = math.floor((x - t) / self.cell_side)
            if c < 0 or c >= n:
                return None
            idx.append(c)
        return tuple(idx)


@dataclass(frozen=True)
class DyadicCube:
    """A dyadic cube ``shift + 2**level * (j + [0,1)**n)``."""

    grid: DyadicGrid
    level: int
    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.coords) != self.grid.dimension:
            raise ValueError(
                f"cube coords {self.coords} do not match dimension {self.grid.dimension}"
            )
        if self.level < self.grid.bottom_level:
            raise ValueError(
                f"cube level {self.level} below finest level {self.grid.bottom_level}"
            )

    # -- geometry ----------------------------------------------------------

    @property
    def side(self) -> float:
        return 2.0 ** self.level

    @property
    def measure(self) -> float:
        return 2.0 ** (self.level * self.grid.dimension)

    @property
    def lower_corner(self) -> tuple[float, ...]:
        return tuple(t + self.side * j for t, j in zip(self.grid.shift, self.coords))

    @property
    def in_window(self) -> bool:
        if self.level > self.grid.top_level:
            return False
        per_axis = 1 << (self.grid.top_level - self.level)
        return all(0 <= j < per_axis for j in self.coords)

    @property
    def cell_count(self) -> int:
        """Number of window cells covered (cubes above the window count all)."""
        if self.level >= self.grid.top_level:
            return self.grid.cell_count
        return 1 << (self.grid.dimension * (self.level - self.grid.bottom_level))

    def contains(self, other: "DyadicCube") -> bool:
        if other.grid != self.grid or other.level > self.level:
            return False
        gap = self.level - other.level
        return all((oj >> gap) == sj for oj, sj in zip(other.coords, self.coords))

    def contains_point(self, point: Sequence[float]) -> bool:
        return all(
            lc <= x < lc + self.side for lc, x in zip(self.lower_corner, point)
        )

    # -- tree moves ----------------------------------------------------------

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.grid, self.level + 1, tuple(j >> 1 for j in self.coords))

    def children(self) -> tuple["DyadicCube", ...]:
        if self.level - 1 < self.grid.bottom_level:
            raise ValueError(
                f"cube at level {self.level} has no children above the finest level"
            )
        return tuple(
            DyadicCube(
                self.grid,
                self.level - 1,
                tuple(2 * j + d for j, d in zip(self.coords, delta)),
            )
            for delta in product((0, 1), repeat=self.grid.dimension)
        )

    def descendants(self, m: int) -> tuple["DyadicCube", ...]:
        """The ``2**(m*n)`` subcubes of side ``2**(level-m)`` tiling this cube."""
        if m < 0:
            raise ValueError("descendant depth must be nonnegative")
        if self.level - m < self.grid.bottom_level:
            raise ValueError(
                f"descendants at depth {m} of a level-{self.level} cube fall below "
                f"the finest level {self.grid.bottom_level}"
            )
        per_axis = 1 << m
        return tuple(
            DyadicCube(
                self.grid,
                self.level - m,
                tuple((j << m) + d for j, d in zip(self.coords, delta)),
            )
            for delta in product(range(per_axis), repeat=self.grid.dimension)
        )

    def ancestors(self, jmax: int) -> tuple["DyadicCube", ...]:
        """The increasing chain ``[self, parent, ...]`` up to ``jmax`` levels."""
        if jmax < 0:
            raise ValueError("ancestor count must be nonnegative")
        if self.level + jmax > self.grid.top_level:
            raise ValueError(
                f"ancestors up to level {self.level + jmax} overflow the window "
                f"top level {self.grid.top_level}"
            )
        chain = [self]
        for _ in range(jmax):
            chain.append(chain[-1].parent())
        return tuple(chain)

    # -- cell access ----------------------------------------------------------

    def cell_slices(self) -> tuple[slice, ...]:
        """Slices selecting this cube's cells in a window value array."""
        if self.level >= self.grid.top_level:
            if not self.contains(self.grid.top_cube):
                raise ValueError(f"{self} does not cover the window")
            return (slice(None),) * self.grid.dimension
        if not self.in_window:
            raise ValueError(f"{self} is not inside the window")
        bs = 1 << (self.level - self.grid.bottom_level)
        return tuple(slice(j * bs, (j + 1) * bs) for j in self.coords)

    def __str__(self) -> str:
        lo = self.lower_corner
        box = " x ".join(f"[{a:g}, {a + self.side:g})" for a in lo)
        return f"Q(level={self.level}, coords={self.coords}) = {box}"


def cells_overlap(a: DyadicCube, b: DyadicCube) -> int:
    """Cell count of the intersection of two window cubes (0 if disjoint)."""
    if a.contains(b):
        return b.cell_count
    if b.contains(a):
        return a.cell_count
    return 0


@dataclass(frozen=True, eq=False)
class StepFunction:
    """A real function, constant on window cells and zero outside the window."""

    grid: DyadicGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != self.grid.shape:
            raise ValueError(
                f"value array shape {arr.shape} does not match window shape "
                f"{self.grid.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("step function values must all be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    # -- constructors --------------------------------------------------------

    @classmethod
    def zeros(cls, grid: DyadicGrid) -> "StepFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def indicator(cls, cube: DyadicCube) -> "StepFunction":
        vals = np.zeros(cube.grid.shape)
        vals[cube.cell_slices()] = 1.0
        return cls(cube.grid, vals)

    @classmethod
    def from_box(
        cls,
        grid: DyadicGrid,
        lows: Sequence[float] | float,
        highs: Sequence[float] | float,
        value: float = 1.0,
    ) -> "StepFunction":
        """Indicator-type function on a cell-aligned box ``[lows, highs)``.

        Raises if a box edge does not land on a cell boundary, so indicator
        data stays exactly representable.
        """
        if isinstance(lows, (int, float)):
            lows = (lows,) * grid.dimension
        if isinstance(highs, (int, float)):
            highs = (highs,) * grid.dimension
        h = grid.cell_side
        slices = []
        for t, lo, hi in zip(grid.shift, lows, highs):
            a = (lo - t) / h
            b = (hi - t) / h
            ia, ib = round(a), round(b)
            if a != ia or b != ib:
                raise ValueError(
                    f"box edge ({lo}, {hi}) is not aligned with cell boundaries"
                )
            ia = max(ia, 0)
            ib = min(ib, grid.cells_per_axis)
            if ia >= ib:
                return cls.zeros(grid)
            slices.append(slice(ia, ib))
        vals = np.zeros(grid.shape)
        vals[tuple(slices)] = value
        return cls(grid, vals)

    # -- algebra --------------------------------------------------------------

    def _check_same_grid(self, other: "StepFunction") -> None:
        if self.grid != other.grid:
            raise ValueError("step functions live on different grids")

    def __add__(self, other: "StepFunction") -> "StepFunction":
        self._check_same_grid(other)
        return StepFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        self._check_same_grid(other)
        return StepFunction(self.grid, self.values - other.values)

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.grid, -self.values)

    def __mul__(self, scalar: float) -> "StepFunction":
        return StepFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __abs__(self) -> "StepFunction":
        return StepFunction(self.grid, np.abs(self.values))

    def restrict(self, cube: DyadicCube) -> "StepFunction":
        """Multiply by the indicator of ``cube`` (identity for window ancestors)."""
        sl = cube.cell_slices()
        vals = np.zeros(self.grid.shape)
        vals[sl] = self.values[sl]
        return type(self)(self.grid, vals)

    def value_at(self, point: Sequence[float] | float) -> float:
        if isinstance(point, (int, float)):
            point = (point,)
        idx = self.grid.cell_index(point)
        if idx is None:
            return 0.0
        return float(self.values[idx])


class Weight(StepFunction):
    """A step function with nonnegative values."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if np.any(self.values < 0):
            raise ValueError("weights must be nonnegative")

    @classmethod
    def ones(cls, grid: DyadicGrid) -> "Weight":
        return cls(grid, np.ones(grid.shape))


@dataclass(frozen=True)
class ExponentPair:
    """Off-diagonal Lebesgue exponents ``1 < p < q < infinity``."""

    p: float
    q: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ValueError("ExponentPair requires finite exponents")
        if not 1.0 < self.p < self.q:
            raise ValueError(
                f"ExponentPair requires 1 < p < q < infinity, got p={self.p}, q={self.q}"
            )

    @property
    def p_prime(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def q_prime(self) -> float:
        return self.q / (self.q - 1.0)


def dual_exponents(exponents: ExponentPair) -> tuple[float, float]:
    """Conjugate exponents ``(p', q')`` with ``q' < p'``."""
    return exponents.p_prime, exponents.q_prime


@dataclass(frozen=True)
class WeightPair:
    """Target weight ``u`` and source dual weight ``sigma = v**(1 - p')``.

    Storing sigma instead of ``v`` keeps every value finite: regions where
    ``v`` is infinite simply carry ``sigma = 0``.
    """

    u: Weight
    sigma: Weight
    exponents: ExponentPair

    def __post_init__(self) -> None:
        if self.u.grid != self.sigma.grid:
            raise ValueError("weight pair components live on different grids")

    @property
    def grid(self) -> DyadicGrid:
        return self.u.grid


# -- integration and norms -----------------------------------------------


def integral(f: StepFunction, cube: DyadicCube | None = None) -> float:
    """Exact integral of ``f`` over ``cube`` (whole window by default)."""
    if cube is None:
        return float(f.values.sum()) * f.grid.cell_measure
    block = f.values[cube.cell_slices()]
    return float(block.sum()) * f.grid.cell_measure


def average(f: StepFunction, cube: DyadicCube) -> float:
    """Average of ``f`` over ``cube``; ancestors of the window are allowed.

    For window cubes this is the plain mean of the covered cells, which is
    the single canonical block reduction used across the package.
    """
    if cube.level > f.grid.top_level:
        if not cube.contains(f.grid.top_cube):
            raise ValueError(f"{cube} neither lies in nor covers the window")
        scale = 2.0 ** ((f.grid.bottom_level - cube.level) * f.grid.dimension)
        return float(f.values.sum()) * scale
    return float(f.values[cube.cell_slices()].mean())


def lp_norm(f: StepFunction, w: StepFunction, p: float) -> float:
    """Weighted norm ``(integral of |f|**p w)**(1/p)`` for ``p >= 1``."""
    if p < 1:
        raise ValueError(f"lp_norm requires p >= 1, got {p}")
    f._check_same_grid(w)
    mass = float((np.abs(f.values) ** p * w.values).sum()) * f.grid.cell_measure
    return mass ** (1.0 / p)


def weak_lq_norm(g: StepFunction, u: StepFunction, q: float) -> float:
    """Weak-type norm ``sup_t t * u({|g| >= t})**(1/q)`` for ``q > 1``.

    The supremum is a maximum over the distinct positive values of ``|g|``.
    """
    if q <= 1:
        raise ValueError(f"weak_lq_norm requires q > 1, got {q}")
    g._check_same_grid(u)
    mag = np.abs(g.values).ravel()
    uv = u.values.ravel()
    mu = g.grid.cell_measure
    best = 0.0
    for t in np.unique(mag):
        if t <= 0.0:
            continue
        mass = float(uv[mag >= t].sum()) * mu
        cand = float(t) * mass ** (1.0 / q)
        if cand > best:
            best = cand
    return best


def values_at(f: StepFunction, points: np.ndarray) -> np.ndarray:
    """Vectorized cell lookup; points outside the window read as zero.

    ``points`` has shape ``(m,)`` in one dimension or ``(m, n)`` otherwise.
    """
    pts = np.asarray(points, dtype=np.float64)
    if f.grid.dimension == 1:
        pts = pts.reshape(-1, 1)
    shift = np.asarray(f.grid.shift)
    idx = np.floor((pts - shift) / f.grid.cell_side).astype(np.int64)
    inside = np.all((idx >= 0) & (idx < f.grid.cells_per_axis), axis=1)
    out = np.zeros(pts.shape[0])
    if np.any(inside):
        sel = tuple(idx[inside].T)
        out[inside] = f.values[sel]
    return out


# -- CSV round-trip ---------------------------------------------------------


def step_to_csv(f: StepFunction, path: str | Path | io.TextIOBase) -> None:
    """One row per finest cell: integer coordinates, then the value.

    Values are written with ``repr`` so binary-representable data round-trips
    exactly.  A leading comment row carries the grid parameters.
    """
    own = isinstance(path, (str, Path))
    fh = open(path, "w", newline="") if own else path
    try:
        shift = ",".join(repr(s) for s in f.grid.shift)
        fh.write(
            f"# twoweight-step dimension={f.grid.dimension} "
            f"top_level={f.grid.top_level} bottom_level={f.grid.bottom_level} "
            f"shift={shift}\n"
        )
        header = ",".join(f"c{i}" for i in range(f.grid.dimension))
        fh.write(f"{header},value\n")
        for coords in product(range(f.grid.cells_per_axis), repeat=f.grid.dimension):
            cs = ",".join(str(c) for c in coords)
            fh.write(f"{cs},{float(f.values[coords])!r}\n")
    finally:
        if own:
            fh.close()


def step_from_csv(
    path: str | Path | io.TextIOBase, grid: DyadicGrid | None = None
) -> StepFunction:
    """Inverse of :func:`step_to_csv`; the grid is read from the header."""
    own = isinstance(path, (str, Path))
    fh = open(path, "r", newline="") if own else path
    try:
        lines = [ln.rstrip("\n") for ln in fh]
    finally:
        if own:
            fh.close()
    if grid is None:
        if not lines or not lines[0].startswith("# twoweight-step"):
            raise ValueError("missing grid header; pass grid= explicitly")
        meta = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
        grid = DyadicGrid(
            dimension=int(meta["dimension"]),
            shift=tuple(float(s) for s in meta["shift"].split(",")),
            top_level=int(meta["top_level"]),
            bottom_level=int(meta["bottom_level"]),
        )
    vals = np.zeros(grid.shape)
    for ln in lines:
        if not ln or ln.startswith("#") or ln.startswith("c0"):
            continue
        parts = ln.split(",")
        coords = tuple(int(c) for c in parts[: grid.dimension])
        vals[coords] = float(parts[grid.dimension])
    return StepFunction(grid, vals)
