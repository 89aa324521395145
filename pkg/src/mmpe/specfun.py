"""Special functions and moment constants used throughout the package.

Everything here is a pure function of its arguments.  Gamma-function ratios
are evaluated in the log domain so that dimensions up to several hundred do
not overflow.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

__all__ = [
    "upper_incomplete_gamma",
    "log_gamma",
    "generalized_q",
    "gaussian_norm_moment",
    "log_gaussian_norm_moment",
    "uniform_ball_moment",
    "ball_volume",
    "log_ball_volume",
    "fano_constant",
    "fano_constant_asymptote",
    "q_function",
]


def _check_shape(x: float) -> None:
    if not x > 0:
        raise ValueError(f"shape parameter must be positive, got {x}")


def upper_incomplete_gamma(x: float, a: float = 0.0) -> float:
    """Upper incomplete gamma integral of t^(x-1) e^(-t) from a to infinity.

    Reduces to the complete gamma function at a = 0.
    """
    _check_shape(x)
    if a < 0:
        raise ValueError(f"lower limit must be nonnegative, got {a}")
    if a == 0.0:
        return float(_sp.gamma(x))
    return float(_sp.gammaincc(x, a) * _sp.gamma(x))


def log_gamma(x: float) -> float:
    _check_shape(x)
    return float(_sp.gammaln(x))


def generalized_q(x: float, a: float) -> float:
    """Regularized upper gamma ratio; 1 at a = 0, decreasing to 0 in a."""
    _check_shape(x)
    if a < 0:
        raise ValueError(f"lower limit must be nonnegative, got {a}")
    return float(_sp.gammaincc(x, a))


def q_function(x: float) -> float:
    """Standard Gaussian tail probability P[Z > x]."""
    return float(_sp.ndtr(-x))


def log_gaussian_norm_moment(n: int, p: float) -> float:
    """log of the per-dimension p-th norm moment of a standard Gaussian vector.

    The moment is (1/n) E[(sum Z_i^2)^(p/2)] = 2^(p/2) Gamma(n/2+p/2) /
    (n Gamma(n/2)).
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if p < 0:
        raise ValueError(f"order must be nonnegative, got {p}")
    return (
        0.5 * p * math.log(2.0)
        + float(_sp.gammaln(n / 2 + p / 2))
        - float(_sp.gammaln(n / 2))
        - math.log(n)
    )


def gaussian_norm_moment(n: int, p: float) -> float:
    return math.exp(log_gaussian_norm_moment(n, p))


def uniform_ball_moment(n: int, p: float, r: float) -> float:
    """Per-dimension p-th norm moment of the uniform law on a ball of radius r."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if p < 0 or r <= 0:
        raise ValueError("order must be nonnegative and radius positive")
    return r**p / (p + n)


def log_ball_volume(n: int, r: float) -> float:
    if n < 1 or r <= 0:
        raise ValueError("dimension must be >= 1 and radius positive")
    return 0.5 * n * math.log(math.pi) + n * math.log(r) - float(_sp.gammaln(n / 2 + 1))


def ball_volume(n: int, r: float) -> float:
    return math.exp(log_ball_volume(n, r))


def fano_constant(n: int, p: float) -> float:
    """Constant relating the p-th error norm to conditional differential entropy.

    k(n, p) = sqrt(pi) (p/n)^(1/p) e^(1/p) Gamma(n/p+1)^(1/n) / Gamma(n/2+1)^(1/n),
    evaluated via log-gamma; k(1, 2)^2 = 2*pi*e.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    _check_shape(p)
    log_k = (
        0.5 * math.log(math.pi)
        + (math.log(p / n) + 1.0) / p
        + (float(_sp.gammaln(n / p + 1)) - float(_sp.gammaln(n / 2 + 1))) / n
    )
    return math.exp(log_k)


def fano_constant_asymptote(n: int, p: float) -> float:
    """Large-n shape sqrt(2*pi*e) n^(-1/2) (p/2)^(-1/(2n)) of the Fano constant."""
    return math.sqrt(2 * math.pi * math.e) / math.sqrt(n) * (p / 2.0) ** (-1.0 / (2 * n))


def gaussian_abs_moment(p: float, delta: float | np.ndarray) -> float | np.ndarray:
    """E|Z - delta|^p for standard Gaussian Z, via the confluent hypergeometric form.

    Exact for all p > 0; used as the inner objective for Gaussian posteriors.
    """
    if p < 0:
        raise ValueError(f"order must be nonnegative, got {p}")
    coeff = 2 ** (p / 2) * _sp.gamma((p + 1) / 2) / math.sqrt(math.pi)
    d = np.asarray(delta, dtype=float)
    out = coeff * _sp.hyp1f1(-p / 2, 0.5, -d * d / 2)
    return float(out) if np.isscalar(delta) else out
