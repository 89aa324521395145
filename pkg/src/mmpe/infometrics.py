"""Information-theoretic applications of the p-th error.

Differential entropies are handled in nats internally and exposed in bits
(conversion by 1/ln 2).  Output-density integrals use the same window
convention as the error engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import engine, model, specfun
from .model import DiscreteAtoms, InputDistribution, ScalarGaussian, UniformBall

__all__ = [
    "GapBreakdown",
    "entropy_bound",
    "trivial_entropy_bound",
    "gaussian_conditional_entropy",
    "conditional_entropy_numeric",
    "mutual_information_scalar",
    "atom_entropy_bits",
    "default_dither",
    "ow_gap_original",
    "ow_gap_generalized",
    "g2_term_bits",
]

_LN2 = math.log(2.0)
_HALF_LOG_2PIE_BITS = 0.5 * math.log(2 * math.pi * math.e) / _LN2
SHAPING_LOSS_BITS = 0.5 * math.log(math.pi * math.e / 6.0) / _LN2


@dataclass
class GapBreakdown:
    """Mutual-information sandwich for a discrete input.

    g1_bits and g2_bits are per-dimension terms of the generalized gap; the
    original-gap variants leave them unset.
    """

    h_bits: float
    gap_bits: float
    lower_bits: float
    g1_bits: float | None = None
    g2_bits: float | None = None
    exact_mi_bits: float | None = None
    inputs: dict | None = None


# ---------------------------------------------------------------------------
# entropy bounds


def entropy_bound(dist: InputDistribution, snr: float, p: float, n: int = 1) -> float:
    """Upper bound on h(X|Y) in bits through the order-p error.

    (n/2) log2( k(n,p)^2 n^(2/p) mmpe^(2/p) ); rejects discrete inputs, whose
    conditional differential entropy is -inf and makes the bound vacuous.
    """
    if isinstance(dist, DiscreteAtoms):
        raise ValueError("discrete input: conditional differential entropy is -inf")
    m = engine.evaluate_mmpe(dist, snr, p).value
    k = specfun.fano_constant(n, p)
    return 0.5 * n * math.log2(k * k * n ** (2.0 / p) * m ** (2.0 / p))


def trivial_entropy_bound(
    dist: InputDistribution, snr: float, p: float, n: int = 1
) -> float:
    """Order-chaining relaxation (n/2) log2( 2 pi e n^((2-p)/p) mmpe^(2/p) ), p >= 2."""
    if p < 2:
        raise ValueError(f"order chaining requires p >= 2, got {p}")
    m = engine.evaluate_mmpe(dist, snr, p).value
    return 0.5 * n * math.log2(
        2 * math.pi * math.e * n ** ((2.0 - p) / p) * m ** (2.0 / p)
    )


def gaussian_conditional_entropy(sigma2: float, snr: float, n: int = 1) -> float:
    """Exact h(X|Y) in bits for a Gaussian input."""
    return 0.5 * n * math.log2(2 * math.pi * math.e * sigma2 / (1.0 + sigma2 * snr))


def _output_entropy_bits(dist: InputDistribution, snr: float) -> float:
    lo_x, hi_x = model.support_bounds(dist)
    rs = math.sqrt(snr)
    lo, hi = rs * lo_x - engine.Y_MARGIN, rs * hi_x + engine.Y_MARGIN

    def integrand(y: float) -> float:
        d = float(model.output_density(dist, snr, np.float64(y)))
        return -d * math.log2(d) if d > 0 else 0.0

    pts = None
    if isinstance(dist, DiscreteAtoms) and dist.points.shape[0] <= 64:
        pts = sorted(float(v) for v in rs * dist.points[:, 0] if lo < v < hi)
    val, _ = integrate.quad(
        integrand, lo, hi, epsabs=1e-9, epsrel=1e-11, limit=400, points=pts
    )
    return val


def mutual_information_scalar(dist: InputDistribution, snr: float) -> float:
    """I(X; Y) in bits for a scalar input, as h(Y) minus the noise entropy."""
    if model.dimension(dist) != 1:
        raise ValueError("mutual_information_scalar requires a scalar input")
    if snr == 0:
        return 0.0
    return _output_entropy_bits(dist, snr) - _HALF_LOG_2PIE_BITS


def conditional_entropy_numeric(dist: InputDistribution, snr: float) -> float:
    """h(X|Y) in bits for a continuous scalar input: h(X) - I(X;Y)."""
    if isinstance(dist, ScalarGaussian):
        return gaussian_conditional_entropy(dist.sigma2, snr)
    if isinstance(dist, UniformBall) and dist.n == 1:
        h_x = math.log2(2.0 * dist.radius)
    elif isinstance(dist, model.TabulatedScalarPdf):
        d = dist.density
        h_x = float(np.trapz(np.where(d > 0, -d * np.log2(np.maximum(d, 1e-300)), 0.0), dist.grid))
    else:
        raise TypeError(f"no entropy route for {type(dist)!r}")
    return h_x - mutual_information_scalar(dist, snr)


# ---------------------------------------------------------------------------
# discrete-input mutual-information sandwich


def atom_entropy_bits(dist: DiscreteAtoms) -> float:
    p = dist.probs[dist.probs > 0]
    return float(-np.sum(p * np.log2(p)))


def ow_gap_original(
    dist: DiscreteAtoms, snr: float, use_mmse: bool = True, exact_mi: bool = False
) -> GapBreakdown:
    """One-dimensional mutual-information gap through the quadratic error.

    gap = 1/2 log2(pi e / 6) + 1/2 log2(1 + err / d_min^2), with err the exact
    quadratic error (sharpened variant) or the linear-estimator error.
    """
    if dist.n != 1:
        raise ValueError("original gap is one-dimensional")
    stats = model.distance_stats(dist)
    if use_mmse:
        err = engine.mmpe_scalar(dist, snr, 2.0).value
    else:
        var = model.variance(dist)
        err = var / (1.0 + var * snr)
    gap = SHAPING_LOSS_BITS + 0.5 * math.log2(1.0 + err / stats.d_min**2)
    h = atom_entropy_bits(dist)
    mi = mutual_information_scalar(dist, snr) if exact_mi else None
    return GapBreakdown(
        h_bits=h,
        gap_bits=gap,
        lower_bits=max(h - gap, 0.0),
        exact_mi_bits=mi,
        inputs={"snr": snr, "use_mmse": use_mmse, "d_min": stats.d_min},
    )


def default_dither(dist: DiscreteAtoms) -> UniformBall:
    """Uniform dither of half the minimum distance (interval when n = 1)."""
    stats = model.distance_stats(dist)
    return UniformBall(dist.n, stats.d_min / 2.0)


def _dither_norm(dither: UniformBall, p: float) -> float:
    return specfun.uniform_ball_moment(dither.n, p, dither.radius) ** (1.0 / p)


def _dither_entropy_nats(dither: UniformBall) -> float:
    if dither.n == 1:
        return math.log(2.0 * dither.radius)
    return specfun.log_ball_volume(dither.n, dither.radius)


def g2_term_bits(n: int, p: float, radius: float) -> float:
    """Per-dimension dither penalty log2( k n^(1/p) ||U||_p / e^(h(U)/n) )."""
    u = UniformBall(n, radius)
    log_k = math.log(specfun.fano_constant(n, p))
    val = (
        log_k
        + math.log(n) / p
        + math.log(_dither_norm(u, p))
        - _dither_entropy_nats(u) / n
    )
    return val / _LN2


def ow_gap_generalized(
    dist: DiscreteAtoms,
    snr: float,
    p: float,
    dither: UniformBall | None = None,
    mmpe_value: float | None = None,
    exact_mi: bool = False,
) -> GapBreakdown:
    """Generalized mutual-information gap for a discrete (possibly vector) input.

    gap/n = G1 + G2 with G1 = log2(1 + mmpe^(1/p) / ||U||_p), p >= 1, and G2
    the dither penalty; the dither support must fit inside half the minimum
    distance so shifted copies stay disjoint.
    """
    if p < 1:
        raise ValueError(f"gap term formula requires p >= 1, got {p}")
    n = dist.n
    stats = model.distance_stats(dist)
    u = dither or default_dither(dist)
    if u.n != n:
        raise ValueError(f"dither dimension {u.n} != input dimension {n}")
    if u.radius > stats.d_min / 2.0 + 1e-12:
        raise ValueError(
            f"dither radius {u.radius} exceeds d_min/2 = {stats.d_min / 2}; "
            "shifted supports would overlap"
        )
    if mmpe_value is None:
        if n == 1:
            mmpe_value = engine.mmpe_scalar(dist, snr, p).value
        else:
            mmpe_value = engine.mmpe_vector_mc(dist, snr, p).value
    u_norm = _dither_norm(u, p)
    g1 = math.log2(1.0 + mmpe_value ** (1.0 / p) / u_norm)
    g2 = g2_term_bits(n, p, u.radius)
    gap = n * (g1 + g2)
    h = atom_entropy_bits(dist)
    mi = mutual_information_scalar(dist, snr) if (exact_mi and n == 1) else None
    return GapBreakdown(
        h_bits=h,
        gap_bits=gap,
        lower_bits=max(h - gap, 0.0),
        g1_bits=g1,
        g2_bits=g2,
        exact_mi_bits=mi,
        inputs={"snr": snr, "p": p, "n": n, "dither_radius": u.radius, "mmpe": mmpe_value},
    )
