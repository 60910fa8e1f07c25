"""Update rules for Perceptron, PA, PA-I, PA-II, CW, AROW, SCW-I and SCW-II.

The coefficient functions are pure and work from :class:`MarginStats`; the
state mutation for the four second-order rules is shared by
:func:`apply_second_order_update`. :class:`OnlineLearner` ties them together
into the predict-then-update protocol.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (CovarianceMode, DegenerateInputError, Example, GaussianState,
                   HyperParams, InputError, LearnerKind, NumericError, StepOutcome,
                   UpdateCoefficients, dot, predict)
from .numeric import cov_downdate, cov_times

log = logging.getLogger(__name__)

# flooring a square-root argument by more than this is reported
_FLOOR_REPORT = 1e-9


@dataclass(frozen=True)
class MarginStats:
    v: float
    m: float
    loss_hinge: float
    loss_phi: float


def _sqrt_floor(arg: float) -> float:
    if arg < 0.0:
        if arg < -_FLOOR_REPORT:
            log.warning("negative square-root argument %.3e floored to 0", arg)
        return 0.0
    return math.sqrt(arg)


def _finite(*vals: float) -> None:
    for val in vals:
        if not math.isfinite(val):
            raise NumericError("non-finite update coefficient")


def margin_stats(state: GaussianState, x: Example, y: int, params: HyperParams) -> MarginStats:
    if x.min_dim > state.dim:
        raise InputError(f"feature index {x.min_dim - 1} exceeds dimension {state.dim}")
    if x.is_zero():
        raise DegenerateInputError("margin statistics of a zero vector")
    sx = cov_times(state.cov, x)
    v = float(sx[x.indices] @ x.values) if state.mode is CovarianceMode.FULL \
        else float(sx @ x.values)
    m = y * float(state.mean[x.indices] @ x.values)
    return _stats(v, m, params.phi)


def _stats(v: float, m: float, phi: float) -> MarginStats:
    return MarginStats(v, m, max(0.0, 1.0 - m), max(0.0, phi * math.sqrt(v) - m))


def pa_coefficient(kind: LearnerKind, stats: MarginStats, x: Example, c: float = 1.0) -> float:
    """Step size of the PA family; the weight update is ``w += step * y * x``."""
    loss = stats.loss_hinge
    if loss <= 0.0:
        return 0.0
    sq = x.squared_norm()
    if sq <= 0.0:
        raise DegenerateInputError("PA step on a zero vector")
    if kind is LearnerKind.PA:
        return loss / sq
    if kind is LearnerKind.PAI:
        return min(c, loss / sq)
    if kind is LearnerKind.PAII:
        return loss / (sq + 1.0 / (2.0 * c))
    raise ValueError(f"{kind} is not a PA variant")


def _u_and_beta(alpha: float, v: float, phi: float) -> tuple[float, float]:
    if alpha == 0.0:
        return v, 0.0
    avp = alpha * v * phi
    # (-avp + sqrt(avp^2 + 4v)) / 2, rationalised to avoid cancellation
    sqrt_u = 2.0 * v / (avp + _sqrt_floor(avp * avp + 4.0 * v))
    beta = alpha * phi / (sqrt_u + avp)
    return sqrt_u * sqrt_u, beta


def _cw_alpha(v: float, m: float, phi: float, psi: float, zeta: float) -> float:
    root = _sqrt_floor(m * m * phi ** 4 / 4.0 + v * phi * phi * zeta)
    if m > 0.0:
        # -m psi + root == zeta (v phi^2 - m^2) / (m psi + root), without cancellation
        alpha = (v * phi * phi - m * m) / (v * (m * psi + root))
    else:
        alpha = (-m * psi + root) / (v * zeta)
    return max(0.0, alpha)


def cw_coefficients(stats: MarginStats, params: HyperParams) -> UpdateCoefficients:
    v, m = stats.v, stats.m
    phi = params.phi
    alpha = _cw_alpha(v, m, phi, params.psi, params.zeta)
    u, beta = _u_and_beta(alpha, v, phi)
    _finite(alpha, beta, u)
    return UpdateCoefficients(alpha, beta, v, m, u)


def scw1_coefficients(stats: MarginStats, params: HyperParams) -> UpdateCoefficients:
    v, m = stats.v, stats.m
    phi = params.phi
    alpha = min(params.c, _cw_alpha(v, m, phi, params.psi, params.zeta))
    u, beta = _u_and_beta(alpha, v, phi)
    _finite(alpha, beta, u)
    return UpdateCoefficients(alpha, beta, v, m, u)


def scw2_coefficients(stats: MarginStats, params: HyperParams) -> UpdateCoefficients:
    v, m = stats.v, stats.m
    phi = params.phi
    phi2 = phi * phi
    n = v + 1.0 / (2.0 * params.c)
    gamma = phi * _sqrt_floor(phi2 * m * m * v * v + 4.0 * n * v * (n + v * phi2))
    if m > 0.0:
        # numerator rationalised: gamma^2 - m^2 (2n + phi^2 v)^2 = 4n(n + v phi^2)(phi^2 v - m^2)
        alpha = 2.0 * (phi2 * v - m * m) / (gamma + m * (2.0 * n + phi2 * v))
    else:
        alpha = (-(2.0 * m * n + phi2 * m * v) + gamma) / (2.0 * (n * n + n * v * phi2))
    alpha = max(0.0, alpha)
    u, beta = _u_and_beta(alpha, v, phi)
    _finite(alpha, beta, u, gamma)
    return UpdateCoefficients(alpha, beta, v, m, u, n=n, gamma=gamma)


def arow_coefficients(stats: MarginStats, params: HyperParams) -> UpdateCoefficients:
    v = stats.v
    beta = 1.0 / (v + params.r)
    alpha = stats.loss_hinge * beta
    u = v * params.r / (v + params.r)
    _finite(alpha, beta)
    return UpdateCoefficients(alpha, beta, v, stats.m, u)


_SECOND_ORDER_RULES = {
    LearnerKind.CW: cw_coefficients,
    LearnerKind.AROW: arow_coefficients,
    LearnerKind.SCWI: scw1_coefficients,
    LearnerKind.SCWII: scw2_coefficients,
}


def coefficients(kind: LearnerKind, stats: MarginStats, params: HyperParams) -> UpdateCoefficients:
    return _SECOND_ORDER_RULES[kind](stats, params)


def apply_second_order_update(state: GaussianState, x: Example, y: int,
                              coeffs: UpdateCoefficients, *,
                              sigma_x: Optional[np.ndarray] = None) -> tuple[GaussianState, bool]:
    """Shift the mean along ``Sigma x`` and shrink the covariance, in place.

    Both moves use the pre-update covariance. Returns ``(state, clamped)`` where
    ``clamped`` reports a PSD clamp in the covariance downdate.
    """
    if coeffs.alpha == 0.0 and coeffs.beta == 0.0:
        return state, False
    if sigma_x is None:
        sigma_x = cov_times(state.cov, x)
    step = coeffs.alpha * y
    if state.mode is CovarianceMode.FULL:
        state.mean += step * sigma_x
    else:
        state.mean[x.indices] += step * sigma_x
    _, clamped = cov_downdate(state.cov, x, coeffs.beta, sigma_x=sigma_x, inplace=True)
    return state, clamped


class OnlineLearner:
    """One online classifier of a given kind.

    Starts from a zero mean and identity covariance. ``step`` predicts with the
    current state, then updates it if the kind's trigger fires.

    >>> from scwlearn import Example, HyperParams, LearnerKind, OnlineLearner
    >>> learner = OnlineLearner(LearnerKind.SCWI, 1, HyperParams(c=1.0, eta=0.9))
    >>> learner.step(Example.from_dict({0: 1.0}, +1))
    StepOutcome(predicted=1, mistake=False, updated=True)
    """

    def __init__(self, kind: LearnerKind | str, dim: int, params: Optional[HyperParams] = None,
                 mode: CovarianceMode | str | None = None):
        self.kind = kind if isinstance(kind, LearnerKind) else LearnerKind.parse(kind)
        self.params = params if params is not None else HyperParams()
        self.state = GaussianState.initial(dim, mode)
        self.updates = 0
        self.steps = 0
        self.clamp_events = 0
        self.cum_alpha2v = 0.0
        self.last_coefficients: Optional[UpdateCoefficients] = None
        self._phi = self.params.phi if self.kind.second_order else 0.0

    @property
    def dim(self) -> int:
        return self.state.dim

    def predict(self, x: Example) -> int:
        return predict(self.state, x)

    def step(self, x: Example, y: Optional[int] = None) -> StepOutcome:
        y = x.label if y is None else y
        if x.min_dim > self.state.dim:
            raise InputError(f"feature index {x.min_dim - 1} exceeds dimension {self.state.dim}")
        score = dot(self.state.mean, x)
        if not math.isfinite(score):
            raise NumericError("non-finite prediction score")
        predicted = 1 if score >= 0 else -1
        mistake = predicted != y
        self.steps += 1
        self.last_coefficients = None
        if x.is_zero():
            return StepOutcome(predicted, mistake, False)
        if self.kind.second_order:
            updated = self._second_order_step(x, y, y * score)
        else:
            updated = self._first_order_step(x, y, y * score, mistake)
        if updated:
            self.updates += 1
        return StepOutcome(predicted, mistake, updated)

    def _first_order_step(self, x: Example, y: int, m: float, mistake: bool) -> bool:
        mean = self.state.mean
        sq = x.squared_norm()
        if not math.isfinite(sq):
            raise NumericError("squared norm of the example overflows")
        if self.kind is LearnerKind.PERCEPTRON:
            if not mistake:
                return False
            mean[x.indices] += y * x.values
            self.cum_alpha2v += sq
            return True
        stats = MarginStats(sq, m, max(0.0, 1.0 - m), 0.0)
        step = pa_coefficient(self.kind, stats, x, self.params.c)
        if step <= 0.0:
            return False
        _finite(step)
        mean[x.indices] += step * y * x.values
        self.cum_alpha2v += step * step * stats.v
        return True

    def _second_order_step(self, x: Example, y: int, m: float) -> bool:
        state = self.state
        sx = cov_times(state.cov, x)
        v = dot(sx, x) if state.mode is CovarianceMode.FULL else float(sx @ x.values)
        if not math.isfinite(v):
            raise NumericError("non-finite margin statistics")
        if v <= 0.0:
            raise NumericError("covariance quadratic form is not positive")
        stats = _stats(v, m, self._phi)
        kind = self.kind
        if kind is LearnerKind.AROW:
            if stats.loss_hinge <= 0.0:
                return False
        elif stats.loss_phi <= 0.0:
            # CW shares the confidence gate so that it and SCW agree at the boundary
            return False
        coeffs = _SECOND_ORDER_RULES[kind](stats, self.params)
        self.last_coefficients = coeffs
        if coeffs.alpha <= 0.0:
            return False
        _, clamped = apply_second_order_update(state, x, y, coeffs, sigma_x=sx)
        if clamped:
            self.clamp_events += 1
            log.debug("PSD clamp at step %d", self.steps)
        self.cum_alpha2v += coeffs.alpha * coeffs.alpha * v
        return True
