"""Realizations of the optimal p-th-error estimator.

Closed forms exist for Gaussian inputs (linear, independent of p) and for
two-point inputs (softmax combination for p > 1, likelihood-ratio hard
decision at p = 1).  Everything else goes through pointwise numeric
minimization of the posterior p-th moment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import optimize

from . import model, specfun
from .model import (
    DiscreteAtoms,
    DiscretePosterior,
    GaussianPosterior,
    GridPosterior,
    InputDistribution,
    Posterior,
)

__all__ = [
    "gaussian_estimator",
    "gaussian_gain",
    "two_point_estimator",
    "hard_decision_estimator",
    "numeric_pointwise_estimator",
    "numeric_vector_estimator",
    "PointwiseResult",
    "posterior_p_moment",
    "minimize_posterior_p_moment",
    "LinearEstimator",
    "TwoPointEstimator",
    "HardDecisionEstimator",
    "ConditionalMeanEstimator",
    "PointwiseMmpeEstimator",
    "EstimatorSpec",
    "evaluate_estimator",
    "VECTOR_DIM_CAP",
]

# scalar minimization: tolerance on v and iteration cap
V_TOL = 1e-10
MAX_ITER = 200
# grid density for the non-convex 0 < p < 1 search
SUBUNIT_GRID = 1024
VECTOR_DIM_CAP = 8


def gaussian_gain(snr: float, sigma2: float = 1.0) -> float:
    return sigma2 * math.sqrt(snr) / (1.0 + sigma2 * snr)


def gaussian_estimator(snr: float, y):
    """Optimal estimator for a unit-variance Gaussian input; linear for every p >= 1."""
    if snr < 0:
        raise ValueError(f"snr must be nonnegative, got {snr}")
    return gaussian_gain(snr) * np.asarray(y, dtype=float)


def two_point_estimator(x1: float, x2: float, q: float, snr: float, p: float, y):
    """Optimal estimator for a two-atom input at order p > 1.

    Computed as a log-domain softmax so that large snr*y products do not
    underflow; output always lies in [min(x1, x2), max(x1, x2)].
    """
    if not 0 < q < 1:
        raise ValueError(f"atom probability must be in (0,1), got {q}")
    if p == 1:
        return hard_decision_estimator(x1, x2, q, snr, y)
    if p < 1:
        raise ValueError("two-point closed form needs p >= 1; use the numeric path")
    y = np.asarray(y, dtype=float)
    rs = math.sqrt(snr)
    e = 1.0 / (p - 1.0)
    logw1 = e * (math.log(q) - 0.5 * (y - rs * x1) ** 2)
    logw2 = e * (math.log(1 - q) - 0.5 * (y - rs * x2) ** 2)
    # lam = w1 / (w1 + w2), stable in both tails
    lam = 1.0 / (1.0 + np.exp(np.clip(logw2 - logw1, -745, 745)))
    out = lam * x1 + (1.0 - lam) * x2
    return float(out) if out.ndim == 0 else out


def hard_decision_estimator(x1: float, x2: float, q: float, snr: float, y):
    """p = 1 two-point estimator: pick x1 when the posterior likelihood ratio
    a = q exp(-(y-sqrt(snr)x1)^2/2) / ((1-q) exp(-(y-sqrt(snr)x2)^2/2)) is >= 1.

    The tie a = 1 maps to x1.
    """
    y = np.asarray(y, dtype=float)
    rs = math.sqrt(snr)
    log_a = math.log(q) - math.log(1 - q) - 0.5 * (y - rs * x1) ** 2 + 0.5 * (y - rs * x2) ** 2
    out = np.where(log_a >= 0.0, x1, x2)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# posterior p-th moments and their minimization


def posterior_p_moment(post: Posterior, p: float, v) -> float:
    """E[|X_y - v|^p] under a scalar posterior."""
    if isinstance(post, DiscretePosterior):
        return float(np.dot(post.weights, np.abs(post.atoms - v) ** p))
    if isinstance(post, GaussianPosterior):
        s = math.sqrt(post.var)
        return post.var ** (p / 2) * float(
            specfun.gaussian_abs_moment(p, (v - post.mean) / s)
        )
    if isinstance(post, GridPosterior):
        return float(np.trapz(post.weights * np.abs(post.grid - v) ** p, post.grid))
    raise TypeError(f"unsupported posterior {type(post)!r}")


@dataclass(frozen=True)
class PointwiseResult:
    value: float
    objective: float
    truncated: bool


def _bracket(post: Posterior) -> tuple[float, float, bool]:
    if isinstance(post, DiscretePosterior):
        return float(post.atoms.min()), float(post.atoms.max()), False
    if isinstance(post, GaussianPosterior):
        half = abs(post.mean) + 10.0 * math.sqrt(post.var)
        return -half, half, True
    if isinstance(post, GridPosterior):
        return float(post.grid[0]), float(post.grid[-1]), False
    raise TypeError(f"unsupported posterior {type(post)!r}")


def minimize_posterior_p_moment(post: Posterior, p: float) -> PointwiseResult:
    """argmin_v E[|X_y - v|^p]; bracketed scalar search for p >= 1, dense grid
    plus local refinement for 0 < p < 1 (the objective is then non-convex)."""
    if p <= 0:
        raise ValueError(f"order must be positive, got {p}")
    lo, hi, truncated = _bracket(post)
    if lo == hi:
        return PointwiseResult(lo, posterior_p_moment(post, p, lo), truncated)
    obj = lambda v: posterior_p_moment(post, p, v)
    if p >= 1:
        res = optimize.minimize_scalar(
            obj, bounds=(lo, hi), method="bounded",
            options={"xatol": V_TOL, "maxiter": MAX_ITER},
        )
        v, f = float(res.x), float(res.fun)
        for edge in (lo, hi):
            fe = obj(edge)
            if fe < f:
                v, f = edge, fe
        return PointwiseResult(v, f, truncated)
    # 0 < p < 1: cusps at every posterior atom; scan then refine
    candidates = list(np.linspace(lo, hi, SUBUNIT_GRID))
    if isinstance(post, DiscretePosterior):
        candidates.extend(post.atoms.tolist())
    vals = np.array([obj(v) for v in candidates])
    order = np.argsort(vals)
    best_v, best_f = candidates[order[0]], vals[order[0]]
    step = (hi - lo) / (SUBUNIT_GRID - 1)
    for k in order[:4]:
        c = candidates[k]
        res = optimize.minimize_scalar(
            obj, bounds=(max(lo, c - step), min(hi, c + step)), method="bounded",
            options={"xatol": V_TOL, "maxiter": MAX_ITER},
        )
        if res.fun < best_f:
            best_v, best_f = float(res.x), float(res.fun)
    return PointwiseResult(best_v, best_f, truncated)


def numeric_pointwise_estimator(
    dist: InputDistribution, snr: float, p: float, y: float
) -> PointwiseResult:
    """Pointwise optimal estimate at a scalar observation y."""
    post = model.posterior_scalar(dist, snr, y)
    return minimize_posterior_p_moment(post, p)


# ---------------------------------------------------------------------------
# vector inputs


def numeric_vector_estimator(
    dist: DiscreteAtoms, snr: float, p: float, y: np.ndarray
) -> np.ndarray:
    """Pointwise optimum for a discrete vector input via simplex search.

    Started from both the posterior mean and the highest-weight atom; the
    better basin wins.  Capped at dimension 8.
    """
    if not isinstance(dist, DiscreteAtoms):
        raise TypeError("numeric_vector_estimator requires a discrete atom set")
    n = dist.n
    if n > VECTOR_DIM_CAP:
        raise ValueError(
            f"dimension {n} exceeds the numeric cap {VECTOR_DIM_CAP}; "
            "use the bound catalog or a Monte-Carlo-only path"
        )
    if p < 1:
        raise ValueError("vector numeric search requires p >= 1")
    y = np.asarray(y, dtype=float).reshape(1, n)
    w = model.posterior_atoms_vectorized(dist, snr, y)[0]

    def obj(v):
        d2 = np.sum((dist.points - v) ** 2, axis=1)
        return float(np.dot(w, d2 ** (p / 2)))

    starts = [w @ dist.points, dist.points[int(np.argmax(w))]]
    best_v, best_f = None, np.inf
    for s in starts:
        res = optimize.minimize(
            obj, s, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000},
        )
        if res.fun < best_f:
            best_v, best_f = res.x, float(res.fun)
    return best_v


# ---------------------------------------------------------------------------
# estimator specs (realized y -> v maps used by the error-evaluation engine)


@dataclass(frozen=True)
class LinearEstimator:
    gain: float


@dataclass(frozen=True)
class TwoPointEstimator:
    x1: float
    x2: float
    q: float
    snr: float
    p: float


@dataclass(frozen=True)
class HardDecisionEstimator:
    x1: float
    x2: float
    q: float
    snr: float


@dataclass(frozen=True)
class ConditionalMeanEstimator:
    """Posterior mean of the ambient (dist, snr) problem; optimal only at p = 2."""


@dataclass(frozen=True)
class PointwiseMmpeEstimator:
    """Numeric pointwise optimum of the ambient problem at the given order."""

    p: float


EstimatorSpec = Union[
    LinearEstimator,
    TwoPointEstimator,
    HardDecisionEstimator,
    ConditionalMeanEstimator,
    PointwiseMmpeEstimator,
]


def evaluate_estimator(
    est: EstimatorSpec, dist: InputDistribution, snr: float, y
) -> np.ndarray:
    """Apply an estimator spec to an array of scalar observations."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if isinstance(est, LinearEstimator):
        return est.gain * y
    if isinstance(est, TwoPointEstimator):
        return np.atleast_1d(
            two_point_estimator(est.x1, est.x2, est.q, est.snr, est.p, y)
        )
    if isinstance(est, HardDecisionEstimator):
        return np.atleast_1d(hard_decision_estimator(est.x1, est.x2, est.q, est.snr, y))
    if isinstance(est, ConditionalMeanEstimator):
        if isinstance(dist, model.ScalarGaussian):
            return gaussian_gain(snr, dist.sigma2) * y
        if isinstance(dist, DiscreteAtoms):
            w = model.posterior_atoms_vectorized(dist, snr, y[:, None])
            return w @ dist.points[:, 0]
        return np.array(
            [model.posterior_mean_var(model.posterior_scalar(dist, snr, yi))[0] for yi in y]
        )
    if isinstance(est, PointwiseMmpeEstimator):
        return np.array(
            [numeric_pointwise_estimator(dist, snr, est.p, yi).value for yi in y]
        )
    raise TypeError(f"unsupported estimator {type(est)!r}")
