"""Lower bounds for two-weight operator norms by search over test functions.

The source norm is parametrized in sigma form: test functions are
``f = sigma * h``, for which ``norm(f, L^p(v)) == (integral |h|**p sigma)**(1/p)``
without ever evaluating ``v`` where ``sigma`` vanishes.  Every reported value
is the ratio actually achieved by the returned witness, so it is a certified
lower bound of the operator norm regardless of how well the search did.

Strong-mode search runs normalized gradient ascent on the smooth ratio;
the weak norm is non-smooth, so both objectives are evaluated over one
mode-independent candidate pool (ascent iterates, random probes, and
level-set indicator probes).  This makes the weak estimate never exceed the
strong one on the same instance and keeps results deterministic in the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .grid import DyadicGrid, StepFunction, WeightPair

__all__ = [
    "NormMode",
    "AscentConfig",
    "NormEstimate",
    "norm_estimate",
    "witness_ratio",
    "operator_matrix",
    "TestingVsNormReport",
    "testing_vs_norm_report",
]


class NormMode(Enum):
    STRONG = "strong"
    WEAK = "weak"


@dataclass(frozen=True)
class AscentConfig:
    """Knobs for the multi-restart search."""

    restarts: int = 4
    max_iterations: int = 80
    step_rule: str = "backtracking"  # or "fixed"
    step_size: float = 0.5
    tolerance: float = 1e-7
    seed: int = 0
    extra_probes: int = 12

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.step_rule not in ("backtracking", "fixed"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


@dataclass(frozen=True, eq=False)
class NormEstimate:
    """A certified lower bound together with the witness achieving it."""

    value: float
    witness: StepFunction
    trials: int
    converged: bool
    mode: NormMode


def operator_matrix(
    op: Callable[[StepFunction], StepFunction], grid: DyadicGrid
) -> np.ndarray:
    """Dense matrix of a linear operator in the finest-cell indicator basis."""
    n = grid.cell_count
    mat = np.zeros((n, n))
    basis = np.zeros(grid.shape)
    flat = basis.reshape(-1)
    for i in range(n):
        flat[i] = 1.0
        mat[:, i] = op(StepFunction(grid, basis)).values.ravel()
        flat[i] = 0.0
    return mat


def _strong_norm(y: np.ndarray, uv: np.ndarray, mu: float, q: float) -> float:
    return (float((np.abs(y) ** q * uv).sum()) * mu) ** (1.0 / q)


def _weak_norm(y: np.ndarray, uv: np.ndarray, mu: float, q: float) -> float:
    mag = np.abs(y)
    best = 0.0
    for t in np.unique(mag):
        if t <= 0.0:
            continue
        mass = float(uv[mag >= t].sum()) * mu
        cand = float(t) * mass ** (1.0 / q)
        if cand > best:
            best = cand
    return best


def _source_norm(h: np.ndarray, sv: np.ndarray, mu: float, p: float) -> float:
    return (float((np.abs(h) ** p * sv).sum()) * mu) ** (1.0 / p)


class _Search:
    """Mode-independent candidate pool with running best per objective."""

    def __init__(self, bmat, sv, uv, mu, p, q, nonnegative):
        self.bmat = bmat
        self.sv = sv
        self.uv = uv
        self.mu = mu
        self.p = p
        self.q = q
        self.nonnegative = nonnegative
        self.active = sv > 0.0
        self.trials = 0
        self.best_strong = (0.0, None)  # (ratio, h)
        self.best_weak = (0.0, None)

    def normalize(self, h: np.ndarray) -> np.ndarray | None:
        h = np.where(self.active, h, 0.0)
        if self.nonnegative:
            h = np.maximum(h, 0.0)
        nrm = _source_norm(h, self.sv, self.mu, self.p)
        if nrm == 0.0 or not math.isfinite(nrm):
            return None
        return h / nrm

    def consider(self, h: np.ndarray) -> tuple[float, np.ndarray, np.ndarray] | None:
        """Normalize and score a candidate on both objectives.

        Returns ``(strong, y, h_normalized)`` or None for degenerate input.
        """
        h = self.normalize(h)
        if h is None:
            return None
        y = self.bmat @ h
        self.trials += 1
        strong = _strong_norm(y, self.uv, self.mu, self.q)
        if strong > self.best_strong[0]:
            self.best_strong = (strong, h)
        weak = _weak_norm(y, self.uv, self.mu, self.q)
        if weak > self.best_weak[0]:
            self.best_weak = (weak, h)
        return strong, y, h

    def gradient(self, h: np.ndarray, y: np.ndarray, strong: float) -> np.ndarray:
        if strong == 0.0:
            return np.zeros_like(h)
        w = self.uv * self.mu * np.abs(y) ** (self.q - 1.0) * np.sign(y)
        grad_num = (self.bmat.T @ w) * strong ** (1.0 - self.q)
        grad_den = self.sv * self.mu * np.abs(h) ** (self.p - 1.0) * np.sign(h)
        return grad_num - strong * grad_den


def _run_search(
    bmat: np.ndarray,
    sv: np.ndarray,
    uv: np.ndarray,
    mu: float,
    p: float,
    q: float,
    cfg: AscentConfig,
    nonnegative: bool,
    grid: DyadicGrid,
) -> tuple[_Search, bool]:
    search = _Search(bmat, sv, uv, mu, p, q, nonnegative)
    size = sv.size
    if not np.any(search.active) or not np.any(bmat):
        return search, True
    all_converged = True
    for restart in range(cfg.restarts):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, restart, 0)))
        h0 = rng.standard_normal(size)
        if nonnegative or restart == 0:
            h0 = np.abs(h0)
        if restart == 0:
            search.consider(np.ones(size))
        state = search.consider(h0)
        if state is None:
            continue
        strong, y, h = state
        h_init = h
        stalled = False
        for _ in range(cfg.max_iterations):
            direction = search.gradient(h, y, strong)
            scale = float(np.linalg.norm(direction))
            if scale == 0.0 or not math.isfinite(scale):
                stalled = True
                break
            # unit direction keeps the trajectory equivariant under scaling
            # of the operator, so estimate ratios inherit true homogeneity
            direction = direction / scale
            accepted = None
            step = cfg.step_size
            for _ in range(20 if cfg.step_rule == "backtracking" else 1):
                cand = search.consider(h + step * direction)
                if cand is not None and cand[0] > strong:
                    accepted = cand
                    break
                step /= 2.0
            if accepted is None:
                stalled = True
                break
            gain = accepted[0] - strong
            strong, y, h = accepted
            if gain <= cfg.tolerance * max(strong, 1.0):
                stalled = True
                break
        if not stalled:
            all_converged = False
        # random and indicator probes, drawn from a separate substream
        rng_probe = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, restart, 1))
        )
        for _ in range(cfg.extra_probes):
            kind = int(rng_probe.integers(3))
            if kind == 0:
                probe = rng_probe.standard_normal(size)
                if nonnegative:
                    probe = np.abs(probe)
            elif kind == 1:
                # indicator of a random window cube
                level = int(
                    rng_probe.integers(grid.bottom_level, grid.top_level + 1)
                )
                per = 1 << (grid.top_level - level)
                coords = tuple(
                    int(c) for c in rng_probe.integers(0, per, grid.dimension)
                )
                probe = StepFunction.indicator(grid.cube(level, coords)).values.ravel()
                if not nonnegative and rng_probe.random() < 0.5:
                    probe = -probe
            else:
                # level set of the restart's initial point; state-free, so the
                # candidate pool only grows with restarts and iterations
                mags = np.abs(h_init[h_init != 0.0])
                if mags.size == 0:
                    continue
                t = float(rng_probe.choice(mags))
                probe = np.where(np.abs(h_init) >= t, np.sign(h_init), 0.0)
            search.consider(probe)
    return search, all_converged


def witness_ratio(
    op: Callable[[StepFunction], StepFunction],
    pair: WeightPair,
    witness: StepFunction,
    mode: NormMode,
) -> float:
    """Ratio achieved by a witness; this is what an estimate's value reports.

    The source norm is recovered from the witness alone through the sigma
    parametrization: cells with zero sigma must carry zero witness values.
    """
    grid = pair.grid
    mu = grid.cell_measure
    sv = pair.sigma.values.ravel()
    fv = witness.values.ravel()
    if np.any((sv == 0.0) & (fv != 0.0)):
        raise ValueError("witness must vanish where sigma vanishes")
    active = sv > 0.0
    p = pair.exponents.p
    source = (
        float((np.abs(fv[active]) ** p * sv[active] ** (1.0 - p)).sum()) * mu
    ) ** (1.0 / p)
    if source == 0.0:
        return 0.0
    y = op(witness).values.ravel()
    uv = pair.u.values.ravel()
    if mode is NormMode.STRONG:
        return _strong_norm(y, uv, mu, pair.exponents.q) / source
    return _weak_norm(y, uv, mu, pair.exponents.q) / source


def norm_estimate(
    op: Callable[[StepFunction], StepFunction],
    pair: WeightPair,
    mode: NormMode,
    cfg: AscentConfig,
    nonnegative: bool = False,
) -> NormEstimate:
    """Best ratio found over the candidate pool, as a certified lower bound.

    ``nonnegative`` restricts test functions to ``f >= 0``, which loses
    nothing for positive operators.
    """
    grid = pair.grid
    bmat = operator_matrix(op, grid) * pair.sigma.values.ravel()[None, :]
    search, converged = _run_search(
        bmat,
        pair.sigma.values.ravel(),
        pair.u.values.ravel(),
        grid.cell_measure,
        pair.exponents.p,
        pair.exponents.q,
        cfg,
        nonnegative,
        grid,
    )
    best = search.best_strong if mode is NormMode.STRONG else search.best_weak
    if best[1] is None:
        witness = StepFunction.zeros(grid)
        return NormEstimate(0.0, witness, search.trials, converged, mode)
    witness = StepFunction(grid, (pair.sigma.values.ravel() * best[1]).reshape(grid.shape))
    value = witness_ratio(op, pair, witness, mode)
    return NormEstimate(value, witness, search.trials, converged, mode)


@dataclass(frozen=True, eq=False)
class TestingVsNormReport:
    """Testing constants next to norm lower bounds for one instance."""

    instance_id: str
    c1: float
    c2: float
    strong: float
    weak: float
    ratio_strong: float  # strong / max(c1, c2)
    ratio_weak: float  # weak / c2
    seed: int

    CSV_HEADER = "instance_id,c1,c2,strong,weak,ratio_strong,ratio_weak,seed"

    def __post_init__(self) -> None:
        for name in ("c1", "c2", "strong", "weak", "ratio_strong", "ratio_weak"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def to_csv_row(self) -> str:
        return (
            f"{self.instance_id},{self.c1!r},{self.c2!r},{self.strong!r},"
            f"{self.weak!r},{self.ratio_strong!r},{self.ratio_weak!r},{self.seed}"
        )

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "c1": self.c1,
            "c2": self.c2,
            "strong": self.strong,
            "weak": self.weak,
            "ratio_strong": self.ratio_strong,
            "ratio_weak": self.ratio_weak,
            "seed": self.seed,
        }


def _guarded_ratio(num: float, den: float) -> float:
    if den > 0.0:
        return num / den
    return 0.0 if num == 0.0 else math.inf


def testing_vs_norm_report(
    alpha,
    pair: WeightPair,
    cfg: AscentConfig,
    instance_id: str = "",
) -> TestingVsNormReport:
    """Testing constants over every window cube plus both norm estimates.

    Both estimates share one candidate pool, so the weak value never exceeds
    the strong one.  Infinite testing constants propagate into the ratios.
    """
    from .sparse import coefficient_apply, outer_testing_constants

    c1, c2 = outer_testing_constants(alpha, pair)
    op = lambda f: coefficient_apply(alpha, f)
    grid = pair.grid
    bmat = operator_matrix(op, grid) * pair.sigma.values.ravel()[None, :]
    search, _ = _run_search(
        bmat,
        pair.sigma.values.ravel(),
        pair.u.values.ravel(),
        grid.cell_measure,
        pair.exponents.p,
        pair.exponents.q,
        cfg,
        True,
        grid,
    )

    def realized(best, mode):
        if best[1] is None:
            return 0.0
        witness = StepFunction(
            grid, (pair.sigma.values.ravel() * best[1]).reshape(grid.shape)
        )
        return witness_ratio(op, pair, witness, mode)

    strong = realized(search.best_strong, NormMode.STRONG)
    weak = realized(search.best_weak, NormMode.WEAK)
    return TestingVsNormReport(
        instance_id=instance_id,
        c1=c1,
        c2=c2,
        strong=strong,
        weak=weak,
        ratio_strong=_guarded_ratio(strong, max(c1, c2)),
        ratio_weak=_guarded_ratio(weak, c2),
        seed=cfg.seed,
    )
