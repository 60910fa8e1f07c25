"""Online evaluation protocol, grid search by cross-validation, aggregation and paired tests."""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

from .core import ConfigError, CovarianceMode, HyperParams, LearnerKind, NumericError
from .data import Dataset, permute
from .learners import OnlineLearner

C_GRID: Tuple[float, ...] = tuple(2.0 ** k for k in range(-4, 5))
# 0.5 is left out: phi = 0 there and the confidence loss never fires
ETA_GRID: Tuple[float, ...] = (0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)
R_GRID: Tuple[float, ...] = C_GRID

EVAL_SEEDS: Tuple[int, ...] = tuple(range(20))
VALIDATION_SEEDS: Tuple[int, ...] = (1000, 1001, 1002, 1003, 1004)
DEFAULT_POINTS = 200


def tuned_params(kind: LearnerKind) -> Tuple[str, ...]:
    """Names of the hyperparameters that affect ``kind``."""
    return {
        LearnerKind.PERCEPTRON: (),
        LearnerKind.PA: (),
        LearnerKind.PAI: ("c",),
        LearnerKind.PAII: ("c",),
        LearnerKind.CW: ("eta",),
        LearnerKind.AROW: ("r",),
        LearnerKind.SCWI: ("c", "eta"),
        LearnerKind.SCWII: ("c", "eta"),
    }[kind]


def param_grid(kind: LearnerKind, c_grid: Sequence[float] = C_GRID,
               eta_grid: Sequence[float] = ETA_GRID,
               r_grid: Sequence[float] = R_GRID) -> List[HyperParams]:
    """Cartesian grid over the parameters ``kind`` uses; the others stay at defaults."""
    names = tuned_params(kind)
    axes = {"c": c_grid, "eta": eta_grid, "r": r_grid}
    points = itertools.product(*(axes[n] for n in names))
    grid = [HyperParams(**dict(zip(names, map(float, p)))) for p in points]
    if not grid:
        raise ConfigError(f"empty parameter grid for {kind.value}")
    return grid


def checkpoints(n: int, points: int = DEFAULT_POINTS) -> np.ndarray:
    """``points`` evenly spaced step counts ending at ``n`` (fewer when n < points)."""
    if n < 1 or points < 1:
        raise ConfigError("need n >= 1 and at least one checkpoint")
    k = np.arange(1, points + 1, dtype=np.int64)
    return np.unique((k * n + points - 1) // points)


@dataclass
class OnlineTrace:
    n: int
    mistakes: int
    updates: int
    elapsed_seconds: float
    cum_alpha2v: float
    clamp_events: int
    t: np.ndarray
    cum_mistakes: np.ndarray
    cum_updates: np.ndarray
    elapsed: np.ndarray

    @property
    def final_mistake_rate(self) -> float:
        return self.mistakes / self.n

    @property
    def update_count(self) -> int:
        return self.updates

    def to_dict(self) -> dict:
        return {
            "n": self.n, "mistakes": self.mistakes, "updates": self.updates,
            "mistake_rate": self.final_mistake_rate, "seconds": self.elapsed_seconds,
            "cum_alpha2v": self.cum_alpha2v, "clamp_events": self.clamp_events,
            "curve": {"t": self.t.tolist(), "cum_mistakes": self.cum_mistakes.tolist(),
                      "cum_updates": self.cum_updates.tolist(),
                      "elapsed": self.elapsed.tolist()},
        }


def run_online(kind: LearnerKind | str, params: HyperParams, stream: Dataset,
               mode: CovarianceMode | str | None = None,
               points: int = DEFAULT_POINTS) -> OnlineTrace:
    """One pass over ``stream``: predict, reveal the label, update per the kind's trigger.

    The clock covers the learning loop only.
    """
    n = len(stream)
    if n == 0:
        raise ConfigError("cannot run on an empty stream")
    learner = OnlineLearner(kind, stream.dim, params, mode)
    marks = checkpoints(n, points)
    cum_m = np.empty(marks.size, dtype=np.int64)
    cum_u = np.empty(marks.size, dtype=np.int64)
    elapsed = np.empty(marks.size)
    mistakes = 0
    j = 0
    next_mark = marks[0]
    step = learner.step
    start = time.perf_counter()
    for t, ex in enumerate(stream.examples, start=1):
        try:
            outcome = step(ex)
        except NumericError as err:
            raise NumericError(str(err), step=t) from err
        mistakes += outcome.mistake
        if t == next_mark:
            cum_m[j] = mistakes
            cum_u[j] = learner.updates
            elapsed[j] = time.perf_counter() - start
            j += 1
            if j < marks.size:
                next_mark = marks[j]
    total = time.perf_counter() - start
    return OnlineTrace(n, mistakes, learner.updates, total, learner.cum_alpha2v,
                       learner.clamp_events, marks, cum_m, cum_u, elapsed)


# --- cross-validation ---------------------------------------------------------

@dataclass
class SweepCell:
    params: HyperParams
    rates: List[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.rates))

    @property
    def std(self) -> float:
        return float(np.std(self.rates, ddof=1)) if len(self.rates) > 1 else 0.0


@dataclass
class SweepResult:
    kind: LearnerKind
    cells: List[SweepCell]
    best: HyperParams = field(init=False)

    def __post_init__(self):
        # ties: smaller C, then smaller eta, then smaller r
        best = min(self.cells, key=lambda c: (c.mean, c.params.c, c.params.eta, c.params.r))
        self.best = best.params

    @property
    def best_cell(self) -> SweepCell:
        return next(c for c in self.cells if c.params == self.best)


def fold_splits(n: int, folds: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """(train, held-out) position arrays for contiguous k-fold splitting of range(n)."""
    if folds < 2:
        raise ConfigError("need at least two folds")
    if n < folds:
        raise ConfigError(f"dataset of {n} examples is smaller than {folds} folds")
    chunks = np.array_split(np.arange(n), folds)
    return [(np.concatenate(chunks[:k] + chunks[k + 1:]), chunks[k]) for k in range(folds)]


def heldout_mistake_rate(kind: LearnerKind, params: HyperParams, train: Dataset,
                         heldout: Dataset, mode=None) -> float:
    """Train online on ``train``, then keep learning online over ``heldout`` and
    return the mistake rate on the held-out part alone."""
    learner = OnlineLearner(kind, train.dim, params, mode)
    for ex in train.examples:
        learner.step(ex)
    mistakes = sum(learner.step(ex).mistake for ex in heldout.examples)
    return mistakes / len(heldout)


def cross_validate(kind: LearnerKind | str, dataset: Dataset,
                   grid: Optional[Sequence[HyperParams]] = None, folds: int = 5,
                   seeds: Sequence[int] = VALIDATION_SEEDS[:1], mode=None,
                   jobs: int = 1) -> SweepResult:
    """k-fold selection over ``grid`` scored by online mistakes on held-out folds.

    Each seed gives one permutation of the data, which is cut into ``folds``
    contiguous chunks.
    """
    kind = kind if isinstance(kind, LearnerKind) else LearnerKind.parse(kind)
    grid = list(grid) if grid is not None else param_grid(kind)
    if not grid:
        raise ConfigError("empty parameter grid")
    if not seeds:
        raise ConfigError("cross-validation needs at least one seed")
    splits = fold_splits(len(dataset), folds)
    tasks = []
    for seed in seeds:
        shuffled = permute(dataset, seed)
        for train_idx, held_idx in splits:
            tasks.append((shuffled.subset(train_idx), shuffled.subset(held_idx)))
    jobs_list = [(kind, p, tr, ho, mode) for p in grid for tr, ho in tasks]
    rates = _map(_cv_task, jobs_list, jobs)
    per = len(tasks)
    cells = [SweepCell(p, rates[i * per:(i + 1) * per]) for i, p in enumerate(grid)]
    return SweepResult(kind, cells)


def _cv_task(args) -> float:
    kind, params, train, heldout, mode = args
    return heldout_mistake_rate(kind, params, train, heldout, mode)


def _map(fn, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves input order, so results join deterministically
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


# --- benchmark over permutations ------------------------------------------------

@dataclass
class RunRecord:
    dataset: str
    kind: LearnerKind
    params: HyperParams
    seed: int
    trace: OnlineTrace


def _run_task(args) -> RunRecord:
    dataset, kind, params, seed, mode, points = args
    trace = run_online(kind, params, permute(dataset, seed), mode, points)
    return RunRecord(dataset.name, kind, params, seed, trace)


def benchmark(dataset: Dataset, settings: Sequence[Tuple[LearnerKind, HyperParams]],
              seeds: Sequence[int] = EVAL_SEEDS, mode=None, points: int = DEFAULT_POINTS,
              jobs: int = 1) -> List[RunRecord]:
    """Run every (kind, params) on each seeded permutation of ``dataset``.

    Records come back sorted by (settings order, seed) regardless of ``jobs``.
    """
    tasks = [(dataset, kind, params, seed, mode, points)
             for kind, params in settings for seed in seeds]
    return _map(_run_task, tasks, jobs)


# --- aggregation and significance ---------------------------------------------

@dataclass(frozen=True)
class Summary:
    mean: float
    std: float

    def __str__(self):
        return f"{self.mean:.3f} ± {self.std:.3f}"


def aggregate_runs(traces: Sequence[OnlineTrace]) -> Dict[str, Summary]:
    """Sample mean and (n-1) standard deviation of the per-run metrics."""
    if len(traces) < 2:
        raise ConfigError("aggregation needs at least two runs")
    metrics = {
        "mistake_rate": [t.final_mistake_rate for t in traces],
        "updates": [float(t.updates) for t in traces],
        "seconds": [t.elapsed_seconds for t in traces],
        "cum_alpha2v": [t.cum_alpha2v for t in traces],
    }
    out = {}
    for key, vals in metrics.items():
        vals = np.asarray(vals, dtype=np.float64)
        # centring on the first value keeps identical runs at exactly zero spread
        out[key] = Summary(float(np.mean(vals)), float(np.std(vals - vals[0], ddof=1)))
    return out


@dataclass(frozen=True)
class TTestResult:
    significant: bool
    t: float
    p: float


def paired_t_test(a: Sequence[float], b: Sequence[float], level: float = 0.95) -> TTestResult:
    """Two-sided paired Student t-test of ``a`` against ``b``.

    Constant nonzero differences count as significant (t = +-inf, p = 0);
    identical samples give t = 0, p = 1. Differences whose spread is within
    rounding of the inputs are treated as constant.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ConfigError("paired t-test needs two equal-length samples of size >= 2")
    diff = a - b
    rounding = 4.0 * np.finfo(np.float64).eps * float(np.max(np.maximum(np.abs(a), np.abs(b))))
    if np.ptp(diff) <= rounding:
        if abs(float(np.mean(diff))) <= rounding:
            return TTestResult(False, 0.0, 1.0)
        return TTestResult(True, math.copysign(math.inf, float(np.mean(diff))), 0.0)
    res = sps.ttest_rel(a, b)
    return TTestResult(bool(res.pvalue < 1.0 - level), float(res.statistic), float(res.pvalue))
