import math

import numpy as np
import pytest
from scipy.stats import t as student_t

from oracles import paired_t_direct
from scwlearn.core import ConfigError, Example, HyperParams, LearnerKind
from scwlearn.data import Dataset, SyntheticSpec, generate_synthetic, permute
from scwlearn.evaluation import (C_GRID, ETA_GRID, EVAL_SEEDS, VALIDATION_SEEDS, SweepCell,
                                 SweepResult, aggregate_runs, benchmark, checkpoints,
                                 cross_validate, fold_splits, paired_t_test, param_grid,
                                 run_online)


def alternating(n):
    return Dataset([Example.from_dict({0: 1.0}, 1 if t % 2 == 0 else -1) for t in range(n)], 1)


@pytest.fixture(scope="module")
def small_synth():
    return generate_synthetic(SyntheticSpec(n=400, d=5, noise_rate=0.05, seed=11))


class TestGrids:
    def test_defaults(self):
        assert C_GRID == tuple(2.0 ** k for k in range(-4, 5))
        assert ETA_GRID == pytest.approx([0.55 + 0.05 * k for k in range(9)])
        assert set(EVAL_SEEDS).isdisjoint(VALIDATION_SEEDS)

    @pytest.mark.parametrize("kind,size", [("perceptron", 1), ("pa", 1), ("pa1", 9),
                                           ("cw", 9), ("arow", 9), ("scw1", 81)])
    def test_param_grid_size(self, kind, size):
        assert len(param_grid(LearnerKind.parse(kind))) == size


class TestRunOnline:
    def test_alternating_perceptron(self):
        tr = run_online("perceptron", HyperParams(), alternating(4))
        assert tr.mistakes == 3 and tr.updates == 3

    def test_separable_after_warm_start_is_zero(self):
        # PA on one repeated example: learns it at step 1, never errs afterwards
        stream = Dataset([Example.from_dict({0: 2.0}, 1)] * 10, 1)
        tr = run_online("pa", HyperParams(), stream)
        assert tr.mistakes == 0 and tr.updates == 1

    def test_trace_invariants(self, small_synth):
        for kind in ("perceptron", "pa2", "arow", "scw2"):
            tr = run_online(kind, HyperParams(c=0.5, eta=0.8), small_synth, points=50)
            assert tr.t.size == 50 and tr.t[-1] == len(small_synth)
            assert np.all(np.diff(tr.cum_mistakes) >= 0) and np.all(np.diff(tr.elapsed) >= 0)
            assert tr.cum_mistakes[-1] / tr.n == tr.final_mistake_rate
            assert tr.update_count <= tr.n and tr.elapsed_seconds >= 0

    def test_checkpoints(self):
        assert checkpoints(1000, 200)[:3].tolist() == [5, 10, 15]
        assert checkpoints(7, 200).tolist() == list(range(1, 8))
        assert checkpoints(10, 3).tolist() == [4, 7, 10]

    def test_deterministic(self, small_synth):
        a = run_online("scw1", HyperParams(c=0.25, eta=0.7), small_synth)
        b = run_online("scw1", HyperParams(c=0.25, eta=0.7), small_synth)
        assert (a.mistakes, a.updates, a.cum_alpha2v) == (b.mistakes, b.updates, b.cum_alpha2v)
        assert np.array_equal(a.cum_mistakes, b.cum_mistakes)

    def test_empty(self):
        with pytest.raises(ConfigError):
            run_online("pa", HyperParams(), Dataset([], 1))


class TestCrossValidate:
    def test_fold_splits_partition(self):
        splits = fold_splits(23, 5)
        held = np.concatenate([h for _, h in splits])
        assert sorted(held.tolist()) == list(range(23))
        for train, heldout in splits:
            assert len(train) + len(heldout) == 23
            assert not set(train.tolist()) & set(heldout.tolist())

    def test_too_small(self):
        with pytest.raises(ConfigError):
            fold_splits(3, 5)
        with pytest.raises(ConfigError):
            fold_splits(10, 1)

    def test_single_point(self, small_synth):
        p = HyperParams(c=2.0)
        assert cross_validate("pa1", small_synth, [p]).best == p

    def test_tie_break(self):
        cells = [SweepCell(HyperParams(c=2.0, eta=0.6), [0.1]),
                 SweepCell(HyperParams(c=1.0, eta=0.9), [0.1]),
                 SweepCell(HyperParams(c=1.0, eta=0.7), [0.1]),
                 SweepCell(HyperParams(c=0.5, eta=0.7), [0.2])]
        assert SweepResult(LearnerKind.SCWI, cells).best == HyperParams(c=1.0, eta=0.7)

    def test_identical_points(self, small_synth):
        p = HyperParams(c=1.0)
        res = cross_validate("pa1", small_synth, [p, p])
        assert res.cells[0].rates == res.cells[1].rates and res.best == p

    def test_best_minimises_mean(self, small_synth):
        res = cross_validate("scw1", small_synth, param_grid(LearnerKind.SCWI, (0.0625, 1.0, 16.0),
                                                             (0.6, 0.9)), folds=4)
        assert len(res.cells) == 6 and all(len(c.rates) == 4 for c in res.cells)
        assert res.best_cell.mean == min(c.mean for c in res.cells)

    def test_parallel_matches_serial(self, small_synth):
        grid = param_grid(LearnerKind.AROW, r_grid=(0.5, 2.0))
        a = cross_validate("arow", small_synth, grid, folds=3, jobs=1)
        b = cross_validate("arow", small_synth, grid, folds=3, jobs=2)
        assert [c.rates for c in a.cells] == [c.rates for c in b.cells]


class TestBenchmark:
    def test_ordering_and_permutation(self, small_synth):
        settings = [(LearnerKind.PA, HyperParams()), (LearnerKind.CW, HyperParams(eta=0.8))]
        recs = benchmark(small_synth, settings, seeds=(3, 1), points=10)
        assert [(r.kind, r.seed) for r in recs] == [(LearnerKind.PA, 3), (LearnerKind.PA, 1),
                                                    (LearnerKind.CW, 3), (LearnerKind.CW, 1)]
        direct = run_online("cw", HyperParams(eta=0.8), permute(small_synth, 1), points=10)
        assert recs[3].trace.mistakes == direct.mistakes


class TestAggregate:
    def _trace(self, small_synth, rate):
        tr = run_online("pa", HyperParams(), small_synth, points=5)
        tr.mistakes = int(round(rate * tr.n))
        return tr

    def test_two_point(self, small_synth):
        agg = aggregate_runs([self._trace(small_synth, 0.1), self._trace(small_synth, 0.2)])
        assert agg["mistake_rate"].mean == pytest.approx(0.15, abs=1e-15)
        assert agg["mistake_rate"].std == pytest.approx(math.sqrt(0.005), abs=1e-12)

    def test_identical(self, small_synth):
        tr = self._trace(small_synth, 0.1)
        assert aggregate_runs([tr, tr, tr])["mistake_rate"].std == 0.0

    def test_mean_is_exact(self, small_synth):
        traces = [run_online("pa1", HyperParams(c=0.5), permute(small_synth, s), points=5)
                  for s in range(5)]
        agg = aggregate_runs(traces)
        assert agg["mistake_rate"].mean == pytest.approx(
            np.mean([t.final_mistake_rate for t in traces]), rel=1e-15)

    def test_needs_two(self, small_synth):
        with pytest.raises(ConfigError):
            aggregate_runs([self._trace(small_synth, 0.1)])


class TestPairedT:
    def test_identical(self):
        res = paired_t_test([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
        assert res == (False, 0.0, 1.0) or (not res.significant and res.t == 0.0)

    def test_constant_shift(self):
        b = np.linspace(0.1, 0.3, 20)
        res = paired_t_test(b + 0.1, b)
        assert res.significant and res.t == math.inf and res.p < 1e-12

    def test_large_effect_with_noise(self, rng):
        b = rng.uniform(0.1, 0.3, 20)
        res = paired_t_test(b + 0.1 + rng.normal(0, 1e-3, 20), b)
        assert res.significant and res.p < 1e-12

    def test_matches_direct(self):
        b = np.linspace(0.2, 0.25, 20)
        diff = 0.01 + 0.001 * np.array([1 if k % 2 == 0 else -1 for k in range(20)])
        res = paired_t_test(b + diff, b)
        t_ref = paired_t_direct(b + diff, b)
        assert res.t == pytest.approx(t_ref, rel=1e-9)
        assert res.p == pytest.approx(2 * student_t.sf(abs(t_ref), df=19), rel=1e-9)
        assert res.significant

    def test_pure_noise_not_significant(self):
        a = np.full(20, 0.2)
        res = paired_t_test(a + np.tile([1e-3, -1e-3], 10), a)
        assert not res.significant and abs(res.t) < 1e-9

    @pytest.mark.parametrize("a,b", [([1.0], [1.0]), ([1.0, 2.0], [1.0])])
    def test_bad_input(self, a, b):
        with pytest.raises(ConfigError):
            paired_t_test(a, b)
