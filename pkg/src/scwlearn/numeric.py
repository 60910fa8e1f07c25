"""Scalar and matrix kernels, plus a dual-search reference solver for the SCW objectives.

Covariances are passed as bare arrays: a 2-d array is a full matrix, a 1-d array
is the diagonal of a diagonal covariance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import (DegenerateInputError, DomainError, Example, GaussianState,
                   CovarianceMode, HyperParams, InputError)

EPS_PSD = 1e-10

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Rational approximation of the normal quantile (relative error ~1e-9), used
# only as the starting point for Halley refinement.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


@dataclass(frozen=True)
class Tolerance:
    abs: float = 1e-12
    rel: float = 1e-12

    def __post_init__(self):
        for name in ("abs", "rel"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"tolerance {name} must be positive and finite")

    def close(self, a: float, b: float) -> bool:
        return abs(a - b) <= max(self.abs, self.rel * max(abs(a), abs(b)))


def norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def _initial_quantile(p: float) -> float:
    # p <= 0.5 here
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def inv_norm_cdf(p: float) -> float:
    """Standard normal quantile: the z with Phi(z) = p."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile argument must lie in (0, 1), got {p}")
    if p > 0.5:
        # 1 - p is exact for p >= 0.5, which makes the function odd about 0.5
        return -inv_norm_cdf(1.0 - p)
    if p == 0.5:
        return 0.0
    z = _initial_quantile(p)
    for _ in range(2):
        err = norm_cdf(z) - p
        u = err * _SQRT2PI * math.exp(0.5 * z * z)
        z -= u / (1.0 + 0.5 * z * u)
    return z


def _is_full(sigma: np.ndarray) -> bool:
    return sigma.ndim == 2


def cov_times(sigma: np.ndarray, x: Example) -> np.ndarray:
    """Sigma @ x. Dense for a full covariance; restricted to the support of x for a diagonal one."""
    if _is_full(sigma):
        if x.indices.size == sigma.shape[0]:
            # strictly increasing indices covering every coordinate: skip the gather
            return sigma @ x.values
        return sigma[:, x.indices] @ x.values
    return sigma[x.indices] * x.values


def quad_form(sigma: np.ndarray, x: Example) -> float:
    """x^T Sigma x for a nonzero x."""
    if x.min_dim > sigma.shape[0]:
        raise InputError(f"feature index {x.min_dim - 1} exceeds dimension {sigma.shape[0]}")
    if x.is_zero():
        raise DegenerateInputError("quadratic form of a zero vector")
    if _is_full(sigma):
        sx = sigma[np.ix_(x.indices, x.indices)] @ x.values
        return float(x.values @ sx)
    return float(sigma[x.indices] @ (x.values * x.values))


def cov_downdate(sigma: np.ndarray, x: Example, beta: float, *,
                 sigma_x: np.ndarray | None = None, inplace: bool = False):
    """Rank-one shrinkage ``Sigma - beta (Sigma x)(Sigma x)^T``.

    A diagonal covariance only receives the diagonal of the update. If
    ``beta * v >= 1`` positive-definiteness would be lost, so beta is clamped to
    ``(1 - EPS_PSD) / v``.

    Returns ``(new_sigma, clamped)``.
    """
    if beta < 0 or not math.isfinite(beta):
        raise DomainError(f"beta must be finite and non-negative, got {beta}")
    out = sigma if inplace else sigma.copy()
    if beta == 0.0 or x.is_zero():
        return out, False
    if sigma_x is None:
        sigma_x = cov_times(sigma, x)
    v = float(sigma_x[x.indices] @ x.values) if _is_full(sigma) else float(sigma_x @ x.values)
    clamped = beta * v >= 1.0
    if clamped:
        beta = (1.0 - EPS_PSD) / v
    if _is_full(sigma):
        # s_i * s_j == s_j * s_i bitwise, so symmetric input stays bitwise symmetric
        out -= beta * np.outer(sigma_x, sigma_x)
    else:
        out[x.indices] -= beta * sigma_x * sigma_x
    return out, clamped


# --- reference solver -------------------------------------------------------

class ObjectiveKind(str, enum.Enum):
    SCWI = "scw1"
    SCWII = "scw2"


@dataclass
class OracleResult:
    mean: np.ndarray
    cov: np.ndarray
    objective: float
    tau: float
    dual_objective: float

    def __iter__(self):
        return iter((self.mean, self.cov, self.objective))


def kl_divergence(mean, cov, mean0, cov0) -> float:
    """KL(N(mean, cov) || N(mean0, cov0)) for dense full covariances."""
    d = mean.shape[0]
    sign0, logdet0 = np.linalg.slogdet(cov0)
    sign, logdet = np.linalg.slogdet(cov)
    if sign0 <= 0 or sign <= 0:
        raise DomainError("KL divergence needs positive-definite covariances")
    diff = mean0 - mean
    trace = np.trace(np.linalg.solve(cov0, cov))
    maha = diff @ np.linalg.solve(cov0, diff)
    return 0.5 * (logdet0 - logdet) + 0.5 * trace + 0.5 * maha - 0.5 * d


def phi_loss(mean, cov, x: np.ndarray, y: int, phi: float) -> float:
    """Signed confidence violation ``phi sqrt(x^T cov x) - y mean.x`` (not clipped at 0)."""
    return phi * math.sqrt(float(x @ cov @ x)) - y * float(mean @ x)


def scw_objective(kind: ObjectiveKind | str, prior: GaussianState, mean, cov,
                  x: Example, y: int, params: HyperParams) -> float:
    """KL to the prior plus the linear (SCW-I) or squared (SCW-II) confidence penalty.

    With ``params.c == inf`` the SCW-I penalty becomes a hard constraint.
    """
    kind = ObjectiveKind(kind)
    xd = x.to_dense(prior.dim)
    kl = kl_divergence(mean, cov, prior.mean, prior.cov_matrix())
    loss = max(0.0, phi_loss(mean, cov, xd, y, params.phi))
    if math.isinf(params.c):
        return kl if loss <= 1e-12 else math.inf
    if kind is ObjectiveKind.SCWI:
        return kl + params.c * loss
    return kl + params.c * loss * loss


def oracle_minimize_scw(kind: ObjectiveKind | str, state: GaussianState, x: Example,
                        y: int, params: HyperParams) -> OracleResult:
    """Solve the SCW-I/SCW-II problem by nested one-dimensional search on the dual.

    For a multiplier ``tau`` the Lagrangian is minimised in closed form over the
    mean and by root-finding over ``q = x^T Sigma x`` for the covariance; the
    outer search drives the dual derivative (the constraint value at the inner
    minimiser) to zero over ``tau in [0, C]`` (SCW-I) or ``tau >= 0`` (SCW-II).
    Intended for small dense problems (d <= 5).
    """
    kind = ObjectiveKind(kind)
    if state.mode is not CovarianceMode.FULL:
        raise DomainError("oracle requires a full covariance")
    if state.dim > 5:
        raise DomainError("oracle is limited to d <= 5")
    sigma0 = state.cov
    try:
        np.linalg.cholesky(sigma0)
    except np.linalg.LinAlgError:
        raise DomainError("prior covariance is not positive definite") from None
    if x.is_zero():
        raise DegenerateInputError("oracle needs a nonzero example")

    phi, c = params.phi, params.c
    xd = x.to_dense(state.dim)
    s0 = sigma0 @ xd
    v = float(xd @ s0)
    m = y * float(state.mean @ xd)

    if phi * math.sqrt(v) - m <= 0.0:
        return OracleResult(state.mean.copy(), sigma0.copy(), 0.0, 0.0, 0.0)

    def inner_q(tau: float) -> float:
        # stationarity of 0.5*(-log(q/v) - 1 + q/v) + tau*phi*sqrt(q) in q, times 2q
        if tau == 0.0:
            return v
        return brentq(lambda q: -1.0 + q / v + tau * phi * math.sqrt(q), 0.0, v,
                      xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    def dual_slope(tau: float) -> float:
        slope = phi * math.sqrt(inner_q(tau)) - (m + tau * v)
        if kind is ObjectiveKind.SCWII:
            slope -= tau / (2.0 * c)
        return slope

    def solve_on(lo: float, hi: float) -> float:
        return brentq(dual_slope, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                      maxiter=500)

    if kind is ObjectiveKind.SCWI and math.isfinite(c):
        tau = c if dual_slope(c) >= 0.0 else solve_on(0.0, c)
    else:
        hi = 1.0
        while dual_slope(hi) > 0.0:
            hi *= 2.0
            if hi > 1e300:
                raise DomainError("dual search failed to bracket the multiplier")
        tau = solve_on(0.0, hi)

    q = inner_q(tau)
    b = (1.0 - q / v) / v
    mean = state.mean + tau * y * s0
    cov = sigma0 - b * np.outer(s0, s0)
    cov = 0.5 * (cov + cov.T)

    kl = kl_divergence(mean, cov, state.mean, sigma0)
    dual = kl + tau * phi_loss(mean, cov, xd, y, phi)
    if kind is ObjectiveKind.SCWII:
        dual -= tau * tau / (4.0 * c)
    objective = scw_objective(kind, state, mean, cov, x, y, params)
    return OracleResult(mean, cov, objective, tau, dual)


def kkt_residuals(kind: ObjectiveKind | str, prior: GaussianState, mean, cov,
                  alpha: float, x: Example, y: int, params: HyperParams) -> dict:
    """KKT residuals of a candidate solution with multiplier ``alpha``.

    ``stationarity_mean`` and ``stationarity_cov`` are relative (scaled by the
    norm of the prior precision); the slackness entries are absolute.
    """
    kind = ObjectiveKind(kind)
    xd = x.to_dense(prior.dim)
    sigma0 = prior.cov_matrix()
    prec0 = np.linalg.inv(sigma0)
    scale = np.linalg.norm(prec0)
    phi, c = params.phi, params.c

    r_mean = prec0 @ (mean - prior.mean) - alpha * y * xd
    u = float(xd @ cov @ xd)
    r_cov = np.linalg.inv(cov) - prec0 - alpha * phi * np.outer(xd, xd) / math.sqrt(u)
    g = phi * math.sqrt(u) - y * float(mean @ xd)
    xi = max(0.0, g)
    # a positive multiplier requires the (softened) constraint to be tight
    slack = alpha * max(0.0, -g)
    if kind is ObjectiveKind.SCWI:
        lam_xi = (c - alpha) * xi if math.isfinite(c) else xi
        return {"stationarity_mean": float(np.linalg.norm(r_mean) / scale),
                "stationarity_cov": float(np.linalg.norm(r_cov) / scale),
                "slackness": slack, "slack_multiplier": lam_xi,
                "dual_feasibility": max(0.0, -alpha, alpha - c)}
    return {"stationarity_mean": float(np.linalg.norm(r_mean) / scale),
            "stationarity_cov": float(np.linalg.norm(r_cov) / scale),
            "slackness": slack, "slack_multiplier": abs(2.0 * c * xi - alpha),
            "dual_feasibility": max(0.0, -alpha)}
