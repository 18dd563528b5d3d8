"""Maximal operators and Sawyer-type two-weight testing quantities.

Two maximal functions are provided: the dyadic one, restricted to window
cubes, and the full one over arbitrary axis-parallel cubes.  In one dimension
the full maximal function of a step function is evaluated exactly: for fixed
``x`` the average over ``[a, b]`` is monotone in each endpoint while the
endpoint moves through a constant run of ``|f|``, so the supremum is attained
with both endpoints in the finite set {run boundaries} + {x}.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .grid import (
    DyadicCube,
    StepFunction,
    WeightPair,
    integral,
    values_at,
)

__all__ = [
    "SawyerDirection",
    "dyadic_maximal",
    "hl_maximal",
    "hl_maximal_at",
    "sawyer_ratio",
    "sawyer_ratio_with_error",
    "sawyer_constants",
]


class SawyerDirection(Enum):
    """Which of the two testing inequalities to evaluate.

    FORWARD normalizes by ``sigma(Q)**(1/p)``, DUAL by ``u(Q)**(1/q')``.
    """

    FORWARD = "forward"
    DUAL = "dual"


def dyadic_maximal(f: StepFunction) -> StepFunction:
    """Largest |f|-average over window cubes containing each cell.

    Every cube from the cell itself up to the window top participates; the
    averages are the canonical block means, so the result agrees bit for bit
    with a brute-force enumeration of cubes.
    """
    grid = f.grid
    mag = np.abs(f.values)
    out = mag.copy()
    n = grid.dimension
    cells = grid.cells_per_axis
    for level in range(grid.bottom_level + 1, grid.top_level + 1):
        bs = 1 << (level - grid.bottom_level)
        nb = cells // bs
        for coords in np.ndindex(*(nb,) * n):
            sl = tuple(slice(j * bs, (j + 1) * bs) for j in coords)
            avg = mag[sl].mean()
            np.maximum(out[sl], avg, out=out[sl])
    return StepFunction(grid, out)


# -- exact 1-D Hardy-Littlewood maximal ------------------------------------


def _runs_1d(f: StepFunction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Constant runs of |f|: boundary positions, run values, antiderivative.

    Returns ``(edges, rvals, mass)`` where ``rvals[i]`` is the value on
    ``[edges[i], edges[i+1])`` and ``mass[i]`` is the integral of |f| from the
    window start up to ``edges[i]``.
    """
    v = np.abs(f.values)
    change = np.nonzero(np.diff(v))[0]
    idx = np.concatenate(([0], change + 1, [v.size]))
    t = f.grid.shift[0]
    h = f.grid.cell_side
    edges = t + h * idx
    rvals = v[idx[:-1]]
    seg = rvals * np.diff(edges)
    mass = np.concatenate(([0.0], np.cumsum(seg)))
    return edges, rvals, mass


def hl_maximal(f: StepFunction, points: np.ndarray) -> np.ndarray:
    """Hardy-Littlewood maximal function of ``f`` at the given points.

    Exact in one dimension.  In higher dimensions falls back to the maximum
    of cell-aligned translated-grid cube averages, which dominates the dyadic
    maximal function and is itself dominated by the true maximal function
    (see :func:`shifted_grid_maximal`).
    """
    if f.grid.dimension != 1:
        return shifted_grid_maximal(f, points)
    xs = np.asarray(points, dtype=np.float64).ravel()
    edges, rvals, mass = _runs_1d(f)
    nb = edges.size  # boundary count
    chunk = max(1, (1 << 24) // nb)
    if xs.size > chunk:
        return np.concatenate(
            [hl_maximal(f, xs[i : i + chunk]) for i in range(0, xs.size, chunk)]
        )
    # averages over all boundary pairs, then the best average spanning each run
    span = np.full((nb, nb), -np.inf)
    if nb >= 2:
        diff_mass = mass[None, :] - mass[:, None]
        diff_pos = edges[None, :] - edges[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            pairs = np.where(diff_pos > 0, diff_mass / diff_pos, -np.inf)
        prefix = np.maximum.accumulate(pairs, axis=0)
        suffix = np.maximum.accumulate(prefix[:, ::-1], axis=1)[:, ::-1]
        span = suffix

    run = np.searchsorted(edges, xs, side="right") - 1
    inside = (run >= 0) & (run < nb - 1)
    run_in = np.clip(run, 0, nb - 2)

    fx = np.zeros_like(xs)
    fx[inside] = mass[run_in[inside]] + rvals[run_in[inside]] * (
        xs[inside] - edges[run_in[inside]]
    )
    fx[run >= nb - 1] = mass[-1]

    out = np.zeros_like(xs)
    # own value limit, and best interval with both endpoints on boundaries
    out[inside] = rvals[run_in[inside]]
    if nb >= 2:
        spanned = inside & (run_in <= nb - 2)
        out[spanned] = np.maximum(out[spanned], span[run_in[spanned], run_in[spanned] + 1])

    # intervals [x, edge] and [edge, x]
    with np.errstate(divide="ignore", invalid="ignore"):
        right = (mass[None, :] - fx[:, None]) / (edges[None, :] - xs[:, None])
        right = np.where(edges[None, :] > xs[:, None], right, -np.inf)
        left = (fx[:, None] - mass[None, :]) / (xs[:, None] - edges[None, :])
        left = np.where(edges[None, :] < xs[:, None], left, -np.inf)
    out = np.maximum(out, right.max(axis=1, initial=-np.inf))
    out = np.maximum(out, left.max(axis=1, initial=-np.inf))
    return np.maximum(out, 0.0)


def hl_maximal_at(f: StepFunction, point: float | Sequence[float]) -> float:
    """Pointwise Hardy-Littlewood maximal value; exact for 1-D step data."""
    if f.grid.dimension == 1:
        if not isinstance(point, (int, float)):
            (point,) = point
        return float(hl_maximal(f, np.array([point]))[0])
    return float(shifted_grid_maximal(f, np.asarray(point).reshape(1, -1))[0])


def shifted_grid_maximal(f: StepFunction, points: np.ndarray) -> np.ndarray:
    """Maximum of dyadic averages over cell-aligned translated grids.

    Candidate cubes at each level come from the grid itself and from copies
    translated by roughly a third of the window per axis.  Every candidate is
    a genuine cube, so the result is a lower bound for the full maximal
    function; the untranslated grid is included, so it dominates the dyadic
    maximal function.  The translated family is the standard device that
    makes the two quantities comparable up to a dimensional constant.
    """
    grid = f.grid
    n = grid.dimension
    pts = np.asarray(points, dtype=np.float64).reshape(-1, n)
    mag = np.abs(f.values)
    # prefix sums with a zero border for exact box sums
    pref = mag
    for ax in range(n):
        pref = np.cumsum(pref, axis=ax)
    pref = np.pad(pref, [(1, 0)] * n)

    def box_sum(lo: np.ndarray, hi: np.ndarray) -> float:
        total = 0.0
        for corner in np.ndindex(*(2,) * n):
            sign = (-1) ** (n - sum(corner))
            idx = tuple(hi[i] if corner[i] else lo[i] for i in range(n))
            total += sign * pref[idx]
        return total

    cells = grid.cells_per_axis
    shift = np.asarray(grid.shift)
    offsets = [np.zeros(n, dtype=np.int64)]
    third = cells // 3
    if third > 0:
        for mask in np.ndindex(*(2,) * n):
            if any(mask):
                offsets.append(third * np.asarray(mask, dtype=np.int64))

    out = np.zeros(pts.shape[0])
    for i, x in enumerate(pts):
        c = np.floor((x - shift) / grid.cell_side).astype(np.int64)
        best = 0.0
        if np.all((c >= 0) & (c < cells)):
            best = float(mag[tuple(c)])
        for off in offsets:
            for level in range(grid.bottom_level, grid.top_level + 1):
                bs = 1 << (level - grid.bottom_level)
                corner = ((c - off) // bs) * bs + off
                lo = np.clip(corner, 0, cells)
                hi = np.clip(corner + bs, 0, cells)
                if np.any(lo >= hi):
                    continue
                avg = box_sum(lo, hi) * grid.cell_measure / (2.0 ** (level * n))
                if avg > best:
                    best = avg
        out[i] = best
    return out


# -- Sawyer testing -----------------------------------------------------------


def _midpoint_samples(cube: DyadicCube, resolution: int) -> tuple[np.ndarray, float]:
    """Midpoint quadrature nodes inside ``cube``: ``resolution`` per cell per axis."""
    if resolution < 1:
        raise ValueError("quadrature resolution must be >= 1")
    grid = cube.grid
    n = grid.dimension
    h = grid.cell_side
    axes = []
    for sl, t in zip(cube.cell_slices(), grid.shift):
        start, stop = sl.start or 0, sl.stop or grid.cells_per_axis
        cell_idx = np.arange(start, stop)
        offs = (2 * np.arange(resolution) + 1) / (2 * resolution)
        axes.append((t + h * (cell_idx[:, None] + offs[None, :])).ravel())
    if n == 1:
        pts = axes[0]
    else:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
    weight = grid.cell_measure / resolution ** n
    return pts, weight


def sawyer_ratio(
    pair: WeightPair,
    cube: DyadicCube,
    direction: SawyerDirection,
    resolution: int = 16,
    use_dyadic: bool = False,
) -> float:
    """Testing ratio for a maximal operator on one cube.

    FORWARD evaluates ``(int_Q M(sigma 1_Q)**q u)**(1/q) / sigma(Q)**(1/p)``,
    DUAL evaluates ``(int_Q M(u 1_Q)**p' sigma)**(1/p') / u(Q)**(1/q')``.
    By default M is the full maximal operator and the integrand is sampled at
    cell midpoints (``resolution`` nodes per cell per axis) with exact
    pointwise maximal values.  With ``use_dyadic`` the dyadic maximal
    function is used instead and the integral is an exact cell sum.  An empty
    cube contributes 0 by the 0/0 convention, and a vanishing denominator
    with positive numerator reports ``inf``.
    """
    e = pair.exponents
    if direction is SawyerDirection.FORWARD:
        source, density = pair.sigma, pair.u
        expo, denom_expo = e.q, 1.0 / e.p
    else:
        source, density = pair.u, pair.sigma
        expo, denom_expo = e.p_prime, 1.0 / e.q_prime
    denom_mass = integral(source, cube)
    g = source.restrict(cube)
    if use_dyadic:
        maximal = dyadic_maximal(g).values[cube.cell_slices()]
        dens = density.values[cube.cell_slices()]
        mass = float((maximal ** expo * dens).sum()) * pair.grid.cell_measure
        num = mass ** (1.0 / expo)
    else:
        pts, w = _midpoint_samples(cube, resolution)
        mvals = hl_maximal(g, pts)
        dvals = values_at(density, pts)
        num = (float((mvals ** expo * dvals).sum()) * w) ** (1.0 / expo)
    if denom_mass <= 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / denom_mass ** denom_expo


def sawyer_ratio_with_error(
    pair: WeightPair,
    cube: DyadicCube,
    direction: SawyerDirection,
    resolution: int = 16,
) -> tuple[float, float]:
    """Testing ratio plus a quadrature error estimate from halving the grid."""
    value = sawyer_ratio(pair, cube, direction, resolution)
    coarse = sawyer_ratio(pair, cube, direction, max(1, resolution // 2))
    if math.isinf(value) or math.isinf(coarse):
        return value, math.inf if value != coarse else 0.0
    return value, abs(value - coarse)


def sawyer_constants(
    pair: WeightPair,
    cubes: Iterable[DyadicCube],
    resolution: int = 16,
    use_dyadic: bool = False,
) -> tuple[float, float]:
    """Suprema of the forward and dual testing ratios over a cube collection."""
    cubes = list(cubes)
    if not cubes:
        raise ValueError("sawyer_constants requires a nonempty cube collection")
    c1 = max(
        sawyer_ratio(pair, q, SawyerDirection.FORWARD, resolution, use_dyadic)
        for q in cubes
    )
    c2 = max(
        sawyer_ratio(pair, q, SawyerDirection.DUAL, resolution, use_dyadic)
        for q in cubes
    )
    return c1, c2
