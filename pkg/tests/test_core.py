import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scwlearn import (ConfigError, CovarianceMode, Example, GaussianState, HyperParams,
                      InputError, LearnerKind, NumericError, OnlineLearner, inv_norm_cdf, predict)


def state_with_mean(mean):
    mean = np.asarray(mean, dtype=float)
    return GaussianState(mean, np.eye(mean.size), CovarianceMode.FULL)


class TestExample:
    def test_from_dict_sorts(self):
        ex = Example.from_dict({3: 1.0, 0: -2.0}, -1)
        assert ex.indices.tolist() == [0, 3]
        assert ex.features == {0: -2.0, 3: 1.0}

    @pytest.mark.parametrize("label", [0, 2, -2])
    def test_bad_label(self, label):
        with pytest.raises(InputError):
            Example.from_dict({0: 1.0}, label)

    def test_duplicate_indices(self):
        with pytest.raises(InputError):
            Example(np.array([1, 1]), np.array([1.0, 2.0]), 1)

    def test_non_finite(self):
        with pytest.raises(InputError):
            Example.from_dict({0: float("inf")}, 1)

    def test_immutable_arrays(self):
        ex = Example.from_dict({0: 1.0}, 1)
        with pytest.raises(ValueError):
            ex.values[0] = 2.0


class TestHyperParams:
    def test_derived_constants(self):
        p = HyperParams(c=1.0, eta=0.9)
        assert p.phi == inv_norm_cdf(0.9)
        assert p.psi == 1 + p.phi ** 2 / 2
        assert p.zeta == 1 + p.phi ** 2

    def test_replace_recomputes(self):
        p = HyperParams(eta=0.9)
        q = dataclasses.replace(p, eta=0.6)
        assert q.phi == inv_norm_cdf(0.6) != p.phi

    @pytest.mark.parametrize("kwargs", [dict(c=0), dict(r=-1), dict(eta=0.5), dict(eta=1.0)])
    def test_validation(self, kwargs):
        with pytest.raises(ConfigError):
            HyperParams(**kwargs)


class TestPredict:
    def test_zero_score_is_positive(self):
        assert predict(state_with_mean([0, 0]), Example.from_dict({0: 1.0}, 1)) == 1

    def test_negative(self):
        assert predict(state_with_mean([-2, 0]), Example.from_dict({0: 1.0}, 1)) == -1

    def test_sparse_dot(self):
        # 2*1 + 1*(-3) = -1
        assert predict(state_with_mean([1, -3]), Example.from_dict({0: 2.0, 1: 1.0}, 1)) == -1

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            predict(state_with_mean([1.0]), Example.from_dict({3: 1.0}, 1))

    def test_non_finite_score(self):
        with pytest.raises(NumericError):
            predict(state_with_mean([np.inf]), Example.from_dict({0: 1.0}, 1))


class TestStep:
    x = Example.from_dict({0: 1.0}, 1)

    def test_scw1_fresh(self):
        learner = OnlineLearner("scw1", 1, HyperParams(c=1.0, eta=0.9))
        out = learner.step(self.x)
        assert (out.predicted, out.mistake, out.updated) == (1, False, True)

    def test_perceptron_fresh(self):
        out = OnlineLearner("perceptron", 1).step(self.x)
        assert not out.mistake and not out.updated

    def test_pa_fresh(self):
        learner = OnlineLearner("pa", 1)
        assert learner.step(self.x).updated
        assert learner.state.mean.tolist() == [1.0]

    def test_explicit_label_overrides(self):
        out = OnlineLearner("perceptron", 1).step(self.x, -1)
        assert out.mistake and out.updated

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            OnlineLearner("scw1", 1).step(Example.from_dict({1: 1.0}, 1))

    @pytest.mark.parametrize("kind", list(LearnerKind))
    def test_zero_vector_never_updates(self, kind):
        learner = OnlineLearner(kind, 2)
        out = learner.step(Example.from_dict({}, -1))
        assert out.predicted == 1 and out.mistake and not out.updated

    @pytest.mark.parametrize("kind", [LearnerKind.PERCEPTRON, LearnerKind.PA, LearnerKind.PAI,
                                      LearnerKind.PAII])
    def test_first_order_keeps_identity(self, kind, rng):
        learner = OnlineLearner(kind, 4, HyperParams(c=0.5), mode="full")
        for _ in range(50):
            learner.step(Example.from_dense(rng.normal(size=4), int(rng.choice([-1, 1]))))
        assert np.array_equal(learner.state.cov, np.eye(4))


def _stream(seed, n, d):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)) * rng.uniform(0.1, 3, size=d)
    w = rng.normal(size=d)
    y = np.where(X @ w + 0.3 * rng.normal(size=n) >= 0, 1, -1)
    return [Example.from_dense(x, int(t)) for x, t in zip(X, y)]


@pytest.mark.parametrize("kind", list(LearnerKind))
def test_deterministic(kind):
    stream = _stream(3, 300, 6)
    runs = []
    for _ in range(2):
        learner = OnlineLearner(kind, 6, HyperParams(c=0.5, eta=0.8, r=2.0))
        outcomes = [learner.step(ex) for ex in stream]
        runs.append((outcomes, learner.state.mean.tobytes(), learner.state.cov.tobytes()))
    assert runs[0] == runs[1]


def test_prediction_uses_pre_update_state():
    stream = _stream(4, 100, 3)
    learner = OnlineLearner("scw2", 3, HyperParams(c=1.0, eta=0.7))
    for ex in stream:
        expected = predict(learner.state.copy(), ex)
        assert learner.step(ex).predicted == expected


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(list(LearnerKind)), st.sampled_from(["full", "diag"]),
       st.integers(min_value=0, max_value=10_000),
       st.sampled_from([2.0 ** k for k in range(-4, 5)]),
       st.sampled_from([0.55, 0.7, 0.95]))
def test_state_stays_valid(kind, mode, seed, c, eta):
    learner = OnlineLearner(kind, 5, HyperParams(c=c, eta=eta, r=c), mode=mode)
    for ex in _stream(seed, 200, 5):
        learner.step(ex)
        learner.state.check()
