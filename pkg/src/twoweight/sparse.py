"""Sparse families, positive dyadic operators, and their testing quantities.

A sparse family is a list of generations of pairwise-disjoint window cubes
whose unions nest, with each cube at most half covered by the next
generation.  The associated positive operator sums cube averages times
indicators; with general nonnegative coefficients this becomes the operator
``f -> sum_Q alpha_Q f_Q 1_Q``, and its outer truncation at a cube R keeps
only the cubes containing R.  All these integrands are step functions, so
the testing quantities here are exact sums, with no quadrature involved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np

from .grid import (
    DyadicCube,
    DyadicGrid,
    StepFunction,
    ValidationReport,
    WeightPair,
    average,
    cells_overlap,
    integral,
)
from .maximal import SawyerDirection, dyadic_maximal
from .shifts import grid_from_obj, _cube_to_obj, _grid_to_obj

__all__ = [
    "SparseFamily",
    "CoefficientMap",
    "sparse_validate",
    "sparse_from_stopping",
    "sparse_apply",
    "coefficient_apply",
    "coefficient_apply_outer",
    "outer_maximal_ratio",
    "outer_testing_ratio",
    "outer_testing_constants",
    "sparse_domination_constant",
    "family_to_json",
    "family_from_json",
    "coefficients_to_json",
    "coefficients_from_json",
]


def _sort_cubes(cubes: Iterable[DyadicCube]) -> tuple[DyadicCube, ...]:
    return tuple(sorted(cubes, key=lambda c: (-c.level, c.coords)))


@dataclass(frozen=True, eq=False)
class SparseFamily:
    """Generations ``{Q_j^k}`` of window cubes; validity via :func:`sparse_validate`."""

    generations: tuple[tuple[DyadicCube, ...], ...]

    def __post_init__(self) -> None:
        gens = tuple(_sort_cubes(g) for g in self.generations if g)
        if not gens:
            raise ValueError("a sparse family needs at least one nonempty generation")
        object.__setattr__(self, "generations", gens)

    @property
    def grid(self) -> DyadicGrid:
        return self.generations[0][0].grid

    def iter_cubes(self) -> Iterator[DyadicCube]:
        for gen in self.generations:
            yield from gen

    def cube_count(self) -> int:
        return sum(len(g) for g in self.generations)


@dataclass(frozen=True, eq=False)
class CoefficientMap:
    """Nonnegative coefficients on window cubes, zero where absent."""

    grid: DyadicGrid
    weights: Mapping[DyadicCube, float]

    def __post_init__(self) -> None:
        items = []
        for cube, val in self.weights.items():
            val = float(val)
            if not math.isfinite(val) or val < 0:
                raise ValueError(f"coefficient for {cube} must be finite and >= 0")
            if cube.grid != self.grid or not cube.in_window:
                raise ValueError(f"{cube} is not a window cube of the map's grid")
            if val != 0.0:
                items.append((cube, val))
        items.sort(key=lambda kv: (-kv[0].level, kv[0].coords))
        object.__setattr__(self, "weights", dict(items))

    @classmethod
    def indicator(cls, family: SparseFamily) -> "CoefficientMap":
        return cls(family.grid, {cube: 1.0 for cube in family.iter_cubes()})

    def get(self, cube: DyadicCube) -> float:
        return self.weights.get(cube, 0.0)

    def restricted_to_ancestors(self, root: DyadicCube) -> "CoefficientMap":
        kept = {c: v for c, v in self.weights.items() if c.contains(root)}
        return CoefficientMap(self.grid, kept)


def sparse_validate(family: SparseFamily) -> ValidationReport:
    """Check disjointness, nesting of the unions, and the half-overlap bound.

    All three checks run in integer cell counts, hence exactly.
    """
    violations = []
    for k, gen in enumerate(family.generations):
        for cube in gen:
            if cube.grid != family.grid or not cube.in_window:
                violations.append(f"generation {k}: {cube} is not a window cube")
        for i, a in enumerate(gen):
            for b in gen[i + 1 :]:
                if cells_overlap(a, b):
                    violations.append(
                        f"generation {k}: cubes {a} and {b} are not disjoint"
                    )
    for k in range(1, len(family.generations)):
        prev, cur = family.generations[k - 1], family.generations[k]
        for q in cur:
            covered = sum(cells_overlap(q, r) for r in prev)
            if covered != q.cell_count:
                violations.append(
                    f"generation {k}: {q} is not contained in the previous union"
                )
        for r in prev:
            inner = sum(cells_overlap(q, r) for q in cur)
            if 2 * inner > r.cell_count:
                violations.append(
                    f"generation {k - 1}: {r} is more than half covered by the next "
                    f"generation"
                )
    return ValidationReport(not violations, tuple(violations))


def sparse_from_stopping(
    f: StepFunction, top: DyadicCube, factor: float = 2.0
) -> SparseFamily:
    """Stopping-time family: children are maximal subcubes whose average jumps.

    Starting from ``top``, each generation collects, inside every cube Q of
    the previous one, the maximal strict subcubes Q' with
    ``avg(Q') > factor * avg(Q)``.  For ``factor >= 2`` the half-overlap
    bound follows from comparing masses; the output is validated regardless.
    """
    if np.any(f.values < 0):
        raise ValueError("stopping-time construction requires f >= 0")
    if factor <= 1.0:
        raise ValueError(f"stopping factor must exceed 1, got {factor}")
    if not top.in_window:
        raise ValueError(f"{top} is not a window cube")

    def selected_children(cube: DyadicCube) -> list[DyadicCube]:
        threshold = factor * average(f, cube)
        found: list[DyadicCube] = []
        if cube.level == f.grid.bottom_level:
            return found
        stack = list(cube.children())
        while stack:
            child = stack.pop()
            if average(f, child) > threshold:
                found.append(child)
            elif child.level > f.grid.bottom_level:
                stack.extend(child.children())
        return found

    generations: list[tuple[DyadicCube, ...]] = [(top,)]
    while True:
        nxt: list[DyadicCube] = []
        for cube in generations[-1]:
            nxt.extend(selected_children(cube))
        if not nxt:
            break
        generations.append(tuple(nxt))
    family = SparseFamily(tuple(generations))
    report = sparse_validate(family)
    if not report:
        raise RuntimeError(
            "stopping-time construction produced an invalid family: "
            + "; ".join(report.violations)
        )
    return family


def sparse_apply(family: SparseFamily, f: StepFunction) -> StepFunction:
    """Sum of cube averages times indicators over all family cubes."""
    report = sparse_validate(family)
    if not report:
        raise ValueError("invalid sparse family: " + "; ".join(report.violations))
    if family.grid != f.grid:
        raise ValueError("sparse family and function live on different grids")
    out = np.zeros(f.grid.shape)
    for cube in family.iter_cubes():
        out[cube.cell_slices()] += average(f, cube)
    return StepFunction(f.grid, out)


def coefficient_apply(alpha: CoefficientMap, f: StepFunction) -> StepFunction:
    """Weighted sum of cube averages times indicators."""
    if alpha.grid != f.grid:
        raise ValueError("coefficients and function live on different grids")
    out = np.zeros(f.grid.shape)
    for cube, val in alpha.weights.items():
        out[cube.cell_slices()] += val * average(f, cube)
    return StepFunction(f.grid, out)


def coefficient_apply_outer(
    alpha: CoefficientMap, root: DyadicCube, f: StepFunction
) -> StepFunction:
    """Outer truncation: keep only cubes containing ``root``.

    The truncation selects cubes, not function values; ``f`` enters with its
    full averages on those cubes.
    """
    if not root.in_window:
        raise ValueError(f"{root} is not a window cube")
    return coefficient_apply(alpha.restricted_to_ancestors(root), f)


def _sup_ratio(num: np.ndarray, den: np.ndarray) -> float:
    """Cellwise sup of num/den with the 0/0 -> 0 convention."""
    best = 0.0
    pos = den > 0.0
    if np.any(pos):
        best = float((num[pos] / den[pos]).max())
    if np.any((den == 0.0) & (num > 0.0)):
        return math.inf
    return best


def outer_maximal_ratio(
    family: SparseFamily, root: DyadicCube, f: StepFunction
) -> float:
    """Sup of the outer-truncated sparse operator against the dyadic maximal.

    Evaluates ``sup_x A^R(f 1_R)(x) / M(f 1_R)(x)`` for nonnegative ``f``,
    where A^R keeps the family cubes containing R.  A geometric-series
    comparison along the ancestor chain of R bounds this by
    ``1 / (1 - 2**(-n))``.
    """
    if np.any(f.values < 0):
        raise ValueError("outer_maximal_ratio requires f >= 0")
    localized = f.restrict(root)
    indicator = CoefficientMap.indicator(family)
    outer = coefficient_apply_outer(indicator, root, localized)
    dyadic = dyadic_maximal(localized)
    return _sup_ratio(outer.values, dyadic.values)


def outer_testing_ratio(
    alpha: CoefficientMap,
    pair: WeightPair,
    root: DyadicCube,
    direction: SawyerDirection,
) -> float:
    """Testing ratio of the outer-truncated coefficient operator at one cube.

    FORWARD: ``(int T^R(sigma 1_R)**q u)**(1/q) / sigma(R)**(1/p)``;
    DUAL:    ``(int T^R(u 1_R)**p' sigma)**(1/p') / u(R)**(1/q')``.
    Both integrals are exact; 0/0 counts as 0 and a positive numerator over a
    vanishing denominator reports ``inf``.
    """
    e = pair.exponents
    if direction is SawyerDirection.FORWARD:
        source, density = pair.sigma, pair.u
        expo, denom_expo = e.q, 1.0 / e.p
    else:
        source, density = pair.u, pair.sigma
        expo, denom_expo = e.p_prime, 1.0 / e.q_prime
    transformed = coefficient_apply_outer(alpha, root, source.restrict(root))
    mass = float((transformed.values ** expo * density.values).sum())
    num = (mass * pair.grid.cell_measure) ** (1.0 / expo)
    denom_mass = integral(source, root)
    if denom_mass <= 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / denom_mass ** denom_expo


def outer_testing_constants(
    alpha: CoefficientMap,
    pair: WeightPair,
    roots: Iterable[DyadicCube] | None = None,
) -> tuple[float, float]:
    """Suprema of forward and dual testing ratios (all window cubes by default)."""
    cubes = list(roots) if roots is not None else list(pair.grid.iter_cubes())
    if not cubes:
        raise ValueError("outer_testing_constants requires a nonempty cube collection")
    c1 = max(
        outer_testing_ratio(alpha, pair, r, SawyerDirection.FORWARD) for r in cubes
    )
    c2 = max(outer_testing_ratio(alpha, pair, r, SawyerDirection.DUAL) for r in cubes)
    return c1, c2


def sparse_domination_constant(
    op: Callable[[StepFunction], StepFunction],
    f: StepFunction,
    family: SparseFamily,
) -> float:
    """Smallest pointwise constant with ``|op f| <= c * A(|f|)`` on the window."""
    report = sparse_validate(family)
    if not report:
        raise ValueError("invalid sparse family: " + "; ".join(report.violations))
    transformed = op(f)
    dominator = sparse_apply(family, abs(f))
    return _sup_ratio(np.abs(transformed.values), dominator.values)


# -- serialization ------------------------------------------------------------


def family_to_json(family: SparseFamily, path: str | Path | None = None) -> str:
    payload = {
        "kind": "sparse-family",
        "grid": _grid_to_obj(family.grid),
        "generations": [
            [_cube_to_obj(c) for c in gen] for gen in family.generations
        ],
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text)
    return text


def family_from_json(source: str | Path) -> SparseFamily:
    text = Path(source).read_text() if isinstance(source, Path) else source
    obj = json.loads(text)
    if obj.get("kind") != "sparse-family":
        raise ValueError("not a sparse-family document")
    grid = grid_from_obj(obj["grid"])
    gens = tuple(
        tuple(grid.cube(c["level"], c["coords"]) for c in gen)
        for gen in obj["generations"]
    )
    return SparseFamily(gens)


def coefficients_to_json(alpha: CoefficientMap, path: str | Path | None = None) -> str:
    payload = {
        "kind": "coefficient-map",
        "grid": _grid_to_obj(alpha.grid),
        "entries": [
            {"cube": _cube_to_obj(c), "value": v} for c, v in alpha.weights.items()
        ],
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text)
    return text


def coefficients_from_json(source: str | Path) -> CoefficientMap:
    text = Path(source).read_text() if isinstance(source, Path) else source
    obj = json.loads(text)
    if obj.get("kind") != "coefficient-map":
        raise ValueError("not a coefficient-map document")
    grid = grid_from_obj(obj["grid"])
    weights = {
        grid.cube(e["cube"]["level"], e["cube"]["coords"]): e["value"]
        for e in obj["entries"]
    }
    return CoefficientMap(grid, weights)
