"""Closed-form bounds on the minimum mean p-th error.

Each operation returns BoundReport records carrying the bound value, its
direction, and (where the caller supplies or requests one) the measured
quantity it must dominate.  Bound values themselves are deterministic; all
dominance checking lives in the verification suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import engine, model, specfun
from .model import DiscreteAtoms, DistanceStats, InputDistribution

__all__ = [
    "BoundReport",
    "trivial_bounds",
    "gaussian_hardest",
    "hardest_sigma2_for",
    "interpolation_bound",
    "interpolation_alpha",
    "discrete_input_bound",
    "phase_transition_binary",
    "scpp_constant",
    "scpp_bound",
    "scpp_beta_from_value",
    "complementary_kappa",
    "complementary_scpp",
    "mn_bound_thm3",
    "mn_prior_bound",
    "thm3_r_opt",
    "thm3_transition_width",
    "prior_transition_width",
    "derivative_sandwich",
    "SandwichReport",
]


@dataclass
class BoundReport:
    name: str
    inputs: dict
    bound: float
    direction: str  # "upper", "lower", or "conjecture" (never asserted)
    truth: float | None = None
    truth_stderr: float = 0.0

    def margin(self) -> float | None:
        """Slack in the asserted direction; positive means the bound holds."""
        if self.truth is None:
            return None
        if self.direction == "upper":
            return self.bound - self.truth
        if self.direction == "lower":
            return self.truth - self.bound
        return None

    def holds(self, tol: float = 1e-6) -> bool:
        m = self.margin()
        if m is None:
            raise ValueError(f"bound {self.name} has no truth reference")
        return m >= -(tol + 4.0 * self.truth_stderr)


def _z_norm(n: int, p: float) -> float:
    """||Z||_p (the 1/p power of the per-dimension Gaussian norm moment)."""
    return specfun.gaussian_norm_moment(n, p) ** (1.0 / p)


# ---------------------------------------------------------------------------
# basic bounds


def trivial_bounds(
    dist: InputDistribution, snr: float, p: float, n: int | None = None
) -> list[BoundReport]:
    """Decorrelator-style ceilings on the p-th error.

    Emits the branch-appropriate conditional-mean-error ceilings (p >= 2 and
    1 <= p <= 2 displays), the any-p ceiling min(||Z||_p^p / snr^(p/2),
    ||X||_p^p), and at p = 2 the classical linear-estimator bounds.
    """
    n = n or model.dimension(dist)
    zp = specfun.gaussian_norm_moment(n, p)
    xp = model.norm_moment(dist, p)
    base = {"snr": snr, "p": p, "n": n}
    out = []

    noise_term = zp / snr ** (p / 2) if snr > 0 else math.inf
    out.append(
        BoundReport("mmpe_ceiling", base, min(noise_term, xp), "upper")
    )
    if p >= 2:
        out.append(
            BoundReport(
                "cond_mean_error_ceiling_p_ge_2",
                base,
                2**p * min(noise_term, xp),
                "upper",
            )
        )
    if 1 <= p <= 2:
        fac = n ** (0.5 - 1.0 / p)
        z_mix = (zp ** (1 / p) + fac * 1.0) ** p  # ||Z||_2 = 1 per dimension
        x_mix = (xp ** (1 / p) + fac * math.sqrt(model.norm_moment(dist, 2))) ** p
        z_term = z_mix / snr ** (p / 2) if snr > 0 else math.inf
        out.append(
            BoundReport(
                "cond_mean_error_ceiling_1_le_p_le_2",
                base,
                min(z_term, x_mix),
                "upper",
            )
        )
    if p == 2:
        var = model.variance(dist)
        out.append(
            BoundReport(
                "lmmse_decorrelator", base, 1.0 / snr if snr > 0 else math.inf, "upper"
            )
        )
        out.append(
            BoundReport("lmmse_power", base, var / (1.0 + var * snr), "upper")
        )
    return out


# ---------------------------------------------------------------------------
# Gaussian ceiling


def hardest_sigma2_for(dist: InputDistribution, p: float) -> float:
    """Smallest sigma^2 such that ||X||_p^p <= sigma^p ||Z||_p^p."""
    n = model.dimension(dist)
    ratio = model.norm_moment(dist, p) / specfun.gaussian_norm_moment(n, p)
    return ratio ** (2.0 / p)


def gaussian_hardest(sigma2: float, snr: float, p: float, n: int = 1) -> BoundReport:
    """Gaussian-matching ceiling kappa * sigma^p ||Z||_p^p / (1+snr sigma^2)^(p/2).

    Valid whenever the input satisfies ||X||_p^p <= sigma^p ||Z||_p^p; the
    prefactor is 1 at p = 2 and tends to 1 as snr grows.
    """
    if p < 1:
        raise ValueError(f"requires p >= 1, got {p}")
    s2snr = sigma2 * snr
    if p == 2:
        kappa = 1.0
    else:
        kappa = ((1.0 + math.sqrt(s2snr)) / math.sqrt(1.0 + s2snr)) ** p
    value = (
        kappa
        * sigma2 ** (p / 2)
        * specfun.gaussian_norm_moment(n, p)
        / (1.0 + s2snr) ** (p / 2)
    )
    return BoundReport(
        "gaussian_hardest",
        {"sigma2": sigma2, "snr": snr, "p": p, "n": n, "kappa": kappa},
        value,
        "upper",
    )


# ---------------------------------------------------------------------------
# interpolation


def interpolation_alpha(p: float, q: float, r: float) -> float:
    if not 0 < p <= q <= r:
        raise ValueError(f"need 0 < p <= q <= r, got {(p, q, r)}")
    if p == r:
        return 1.0
    return (1.0 / q - 1.0 / r) / (1.0 / p - 1.0 / r)


def interpolation_bound(
    dist: InputDistribution, snr: float, p: float, q: float, r: float
) -> list[BoundReport]:
    """Interpolation bounds on the order-q error from measured orders p and r.

    Produces the two valid bounds (error of the order-r optimum measured at
    order p, and of the order-p optimum measured at order r), the variant
    through the mid-order estimator, and the conjectured all-optimal form
    (direction tagged "conjecture": it fails in general and is reported only
    as data).  All values are on the mmpe(q) scale.
    """
    alpha = interpolation_alpha(p, q, r)
    base = {"snr": snr, "p": p, "q": q, "r": r, "alpha": alpha}
    truth = engine.mmpe_scalar(dist, snr, q).value
    if p == r:
        return [BoundReport("interp_degenerate", base, truth, "upper", truth)]
    ab = 1.0 - alpha
    m_p = engine.mmpe_scalar(dist, snr, p).value
    m_r = engine.mmpe_scalar(dist, snr, r).value
    f_r = estimators_pointwise(r)
    f_p = estimators_pointwise(p)
    f_mid = estimators_pointwise(0.5 * (p + r))
    cross_rp = engine.p_error_of(f_r, dist, snr, p)  # ||X - f_r||_p^p
    cross_pr = engine.p_error_of(f_p, dist, snr, r)  # ||X - f_p||_r^r
    mid_p = engine.p_error_of(f_mid, dist, snr, p)
    mid_r = engine.p_error_of(f_mid, dist, snr, r)

    def combine(term_p: float, term_r: float) -> float:
        # [term_p^(alpha/p) term_r^(ab/r)]^q on the q-th power scale
        return (term_p ** (alpha / p) * term_r ** (ab / r)) ** q

    return [
        BoundReport("interp_via_high_order_estimator", base, combine(cross_rp, m_r), "upper", truth),
        BoundReport("interp_via_low_order_estimator", base, combine(m_p, cross_pr), "upper", truth),
        BoundReport("interp_mid_estimator", base, combine(mid_p, mid_r), "upper", truth),
        BoundReport("interp_conjecture", base, combine(m_p, m_r), "conjecture", truth),
    ]


def estimators_pointwise(order: float):
    from .estimators import PointwiseMmpeEstimator

    return PointwiseMmpeEstimator(order)


# ---------------------------------------------------------------------------
# discrete inputs and phase transitions


def discrete_input_bound(
    stats: DistanceStats,
    probs: np.ndarray,
    snr: float,
    p: float,
    n: int = 1,
) -> list[BoundReport]:
    """Exponentially decaying ceilings for a discrete input.

    Returns the per-atom form, the looser min-distance form, and for n = 1
    the Chernoff relaxation 2 d_max^p exp(-snr d_min^2 / 8).
    """
    probs = np.asarray(probs, dtype=float)
    base = {"snr": snr, "p": p, "n": n, "d_min": stats.d_min, "d_max": stats.d_max}
    qbar = np.array(
        [specfun.generalized_q(n / 2, snr * d * d / 8.0) for d in stats.per_atom]
    )
    per_atom = stats.d_max**p * float(np.dot(probs, qbar)) / n
    min_dist = (
        stats.d_max**p * specfun.generalized_q(n / 2, snr * stats.d_min**2 / 8.0) / n
    )
    out = [
        BoundReport("discrete_per_atom", base, per_atom, "upper"),
        BoundReport("discrete_min_distance", base, min_dist, "upper"),
    ]
    if n == 1:
        chern = 2.0 * stats.d_max**p * math.exp(-snr * stats.d_min**2 / 8.0)
        out.append(BoundReport("discrete_chernoff", base, chern, "upper"))
    return out


def phase_transition_binary(
    ns: list[int], snr: float, p: float
) -> list[tuple[int, float]]:
    """Antipodal all-ones input: the normalized discrete bound versus dimension.

    Above snr = 1 the bound 4^(p/2) n^(p/2) Qbar(n/2; n snr/2) / n collapses
    to zero; below it only the trivial ceiling 4^(p/2) n^(p/2-1) is available.
    The boundary snr = 1 is rejected.
    """
    if snr == 1:
        raise ValueError("snr = 1 is the phase-transition boundary; bound uninformative")
    rows = []
    for n in ns:
        if snr > 1:
            val = 4 ** (p / 2) * n ** (p / 2) * specfun.generalized_q(n / 2, n * snr / 2) / n
        else:
            val = 4 ** (p / 2) * n ** (p / 2 - 1)
        rows.append((n, val))
    return rows


# ---------------------------------------------------------------------------
# SCPP and its complement


def scpp_constant(p: float) -> float:
    """Multiplicative constant of the generalized single-crossing bound."""
    if p < 1:
        raise ValueError(f"requires p >= 1, got {p}")
    return 1.0 if p == 2 else 2.0


def scpp_beta_from_value(m_value: float, snr0: float, p: float, n: int = 1) -> float:
    """Recover beta from a measured p-th error at snr0 via the fixed-point form."""
    m2 = m_value ** (2.0 / p)
    z2 = _z_norm(n, p) ** 2
    denom = z2 - snr0 * m2
    if denom <= 0:
        raise ValueError("measured error too large for a finite beta")
    beta = m2 / denom
    if beta < 0:
        raise ValueError(f"recovered beta is negative: {beta}")
    return beta


def scpp_bound(
    beta: float, snr0: float, snr: float, p: float, n: int = 1
) -> BoundReport:
    """Single-crossing ceiling for all snr >= snr0, on the p-th error scale."""
    if snr < snr0:
        raise ValueError(f"valid for snr >= snr0, got snr={snr} < snr0={snr0}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    c_p = scpp_constant(p)
    z2 = _z_norm(n, p) ** 2
    val = (c_p * beta * z2 / (1.0 + beta * snr)) ** (p / 2)
    return BoundReport(
        "scpp",
        {"beta": beta, "snr0": snr0, "snr": snr, "p": p, "n": n, "c_p": c_p},
        val,
        "upper",
    )


def complementary_kappa(n: int, t: float) -> float:
    """Prefactor of the below-snr0 bound; equals 2^(1/6) at n = 1, t = 1/2."""
    if not 0 <= t < 1:
        raise ValueError(f"need 0 <= t < 1, got {t}")
    if t == 0:
        return 1.0
    return (2.0**n / n**2) ** (t / (t + 1)) * (1.0 / (1.0 - t)) ** (
        n * t / (t + 1) - 0.5
    )


def complementary_scpp(
    dist: InputDistribution, snr: float, snr0: float, p: float, n: int = 1
) -> BoundReport:
    """Ceiling for snr <= snr0 through the higher-order error at snr0.

    The order blows up as snr -> 0 (t -> 1), which is why that endpoint is
    rejected.  The higher-order error at snr0 is evaluated by the engine.
    """
    if not 0 < snr <= snr0:
        raise ValueError(f"need 0 < snr <= snr0, got snr={snr}, snr0={snr0}")
    t = (snr0 - snr) / snr0
    q_order = p * (1.0 + t) / (1.0 - t)
    high = engine.evaluate_mmpe(dist, snr0, q_order)
    kappa = complementary_kappa(n, t)
    val = kappa * high.value ** ((1.0 - t) / (1.0 + t))
    return BoundReport(
        "complementary_scpp",
        {
            "snr": snr,
            "snr0": snr0,
            "p": p,
            "n": n,
            "t": t,
            "kappa": kappa,
            "order_at_snr0": q_order,
        },
        val,
        "upper",
    )


# ---------------------------------------------------------------------------
# phase-transition width (constrained-input supremum)

THM3_R_GRID = 32


def thm3_r_opt(snr0: float, mmse0: float, gamma: float) -> float:
    """Approximately optimal interpolation order, floored at its feasibility limit."""
    r = 2.0 * math.log(4.0 * math.e / (snr0 * mmse0))
    return max(r, 2.0 / gamma * (1 + 1e-9))


def _log_mr_bound(r: float, snr0: float, n: int) -> float:
    # log of 2^r ||Z||_r^r / snr0^(r/2); the ||X||_r branch is not usable when
    # only a second-moment constraint is known.
    return (
        r * math.log(2.0)
        + specfun.log_gaussian_norm_moment(n, r)
        - 0.5 * r * math.log(snr0)
    )


def mn_bound_thm3(
    beta: float,
    snr: float,
    snr0: float,
    n: int,
    log_mr=None,
) -> BoundReport:
    """Ceiling on the constrained mean-square error below snr0.

    Minimizes over a geometric grid of interpolation orders around the
    approximate optimum; evaluated in the log domain so large orders and
    dimensions do not overflow.  log_mr, when given, maps r to the log of the
    higher-order error at snr0 and replaces the default deterministic bound.
    """
    if not 0 < snr <= snr0:
        raise ValueError(f"need 0 < snr <= snr0, got snr={snr}, snr0={snr0}")
    if not 0 <= beta <= 1:
        raise ValueError(f"beta must be in [0,1], got {beta}")
    gamma = snr / (2.0 * snr0 - snr)
    m0 = beta / (1.0 + beta * snr0)
    r_opt = thm3_r_opt(snr0, m0, gamma)
    lo = 2.0 / gamma * (1 + 1e-6)
    grid = np.geomspace(lo, max(4.0 * r_opt, lo * 1.001), THM3_R_GRID)
    grid = np.append(grid, r_opt)
    mr = log_mr or (lambda r: _log_mr_bound(r, snr0, n))
    best, best_r = math.inf, None
    for r in grid:
        if r <= 2.0 / gamma:
            continue
        log_kappa = (
            0.5 * math.log(2.0)
            - (1.0 - gamma) * math.log(n)
            + 0.5 * (n * (1.0 - gamma) - 1.0) * math.log((1.0 + gamma) / gamma)
            + 2.0 * (1.0 - gamma) / (r - 2.0) * mr(r)
        )
        log_val = log_kappa + (gamma * r - 2.0) / (r - 2.0) * math.log(m0)
        if log_val < best:
            best, best_r = log_val, float(r)
    return BoundReport(
        "mn_interpolated",
        {
            "beta": beta,
            "snr": snr,
            "snr0": snr0,
            "n": n,
            "gamma": gamma,
            "r": best_r,
            "r_opt": r_opt,
        },
        math.exp(best),
        "upper",
    )


def mn_prior_bound(beta: float, snr: float, snr0: float, n: int) -> BoundReport:
    """Earlier additive ceiling mmse(snr0) + (n+2)(1/snr - 1/snr0)."""
    if not 0 < snr <= snr0:
        raise ValueError(f"need 0 < snr <= snr0, got snr={snr}, snr0={snr0}")
    val = beta / (1.0 + beta * snr0) + (n + 2) * (1.0 / snr - 1.0 / snr0)
    return BoundReport(
        "mn_additive", {"beta": beta, "snr": snr, "snr0": snr0, "n": n}, val, "upper"
    )


def _width_by_bisection(fn, snr0: float) -> float:
    # snr_L solves fn(snr) = 1/(1+snr); the transition width is snr0 - snr_L
    g = lambda s: math.log(fn(s)) - math.log(1.0 / (1.0 + s))
    if g(snr0) >= 0:
        return snr0
    s = optimize.brentq(g, 1e-4, snr0, xtol=1e-10)
    return snr0 - s


def thm3_transition_width(snr0: float, beta: float, n: int) -> float:
    return _width_by_bisection(
        lambda s: mn_bound_thm3(beta, s, snr0, n).bound, snr0
    )


def prior_transition_width(snr0: float, beta: float, n: int) -> float:
    return _width_by_bisection(
        lambda s: mn_prior_bound(beta, s, snr0, n).bound, snr0
    )


# ---------------------------------------------------------------------------
# derivative sandwich


@dataclass
class SandwichReport:
    lower: float  # mmse^2
    middle: engine.MmpeEstimate  # (1/n) Tr E[Cov^2(X|Y)]
    upper: float  # n * mmpe(p=4)
    corollary: float  # 3/snr^2 (n = 1 relaxation), inf at snr = 0
    inputs: dict = field(default_factory=dict)


def derivative_sandwich(
    dist: InputDistribution,
    snr: float,
    n: int | None = None,
    samples: int = engine.MC_DEFAULT_SAMPLES,
    seed: int = model.DEFAULT_SEED,
) -> SandwichReport:
    """mmse^2 <= (1/n) Tr E[Cov^2(X|Y)] <= n mmpe(p=4), middle term by MC."""
    n = n or model.dimension(dist)
    if n > 8:
        raise ValueError(f"covariance estimation capped at n = 8, got {n}")
    mmse = engine.evaluate_mmpe(dist, snr, 2.0)
    fourth = engine.evaluate_mmpe(dist, snr, 4.0)
    middle = engine.posterior_variance_moment_mc(dist, snr, samples=samples, seed=seed)
    corollary = 3.0 / snr**2 if snr > 0 else math.inf
    return SandwichReport(
        lower=mmse.value**2,
        middle=middle,
        upper=n * fourth.value,
        corollary=corollary,
        inputs={"snr": snr, "n": n, "samples": samples, "seed": seed},
    )
