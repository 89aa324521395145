"""Input distributions, the scaled-input AWGN channel, and posteriors.

The channel is Y = sqrt(snr) X + Z with Z standard Gaussian (identity
covariance); the noise law is fixed, so a (distribution, snr) pair fully
determines the estimation problem.

Distributions are immutable after construction.  Vector numeric work is
restricted to discrete atom sets and Gaussians; continuous non-Gaussian
vector inputs are rejected at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import specfun

__all__ = [
    "ScalarGaussian",
    "VectorGaussian",
    "DiscreteAtoms",
    "UniformBall",
    "TabulatedScalarPdf",
    "InputDistribution",
    "ChannelConfig",
    "DistanceStats",
    "DiscretePosterior",
    "GaussianPosterior",
    "GridPosterior",
    "build_distribution",
    "bpsk",
    "pam",
    "pam4",
    "asym_pair",
    "pmone_vector",
    "sample_channel",
    "posterior_scalar",
    "distance_stats",
    "dimension",
    "support_bounds",
    "norm_moment",
    "variance",
    "output_density",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 0xC0FFEE

_ATOM_TOL = 1e-12
_PDF_TOL = 1e-8
_MIN_GRID = 64


@dataclass(frozen=True)
class ScalarGaussian:
    """Zero-mean scalar Gaussian input with variance sigma2."""

    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"variance must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class VectorGaussian:
    """Zero-mean n-dimensional Gaussian with per-dimension variance sigma2."""

    n: int
    sigma2: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if not self.sigma2 > 0:
            raise ValueError(f"variance must be positive, got {self.sigma2}")


@dataclass(frozen=True, eq=False)
class DiscreteAtoms:
    """Finite atom set in R^n with probabilities summing to one."""

    points: np.ndarray  # shape (N, n)
    probs: np.ndarray  # shape (N,)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pr = np.asarray(self.probs, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != pr.shape[0]:
            raise ValueError("points and probs must align")
        if np.any(pr < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(pr.sum() - 1.0) > _ATOM_TOL:
            raise ValueError(f"probabilities must sum to 1, got {pr.sum()!r}")
        for i in range(pts.shape[0]):
            for j in range(i + 1, pts.shape[0]):
                if np.linalg.norm(pts[i] - pts[j]) <= _ATOM_TOL:
                    raise ValueError(f"duplicate atoms at indices {i} and {j}")
        pts.setflags(write=False)
        pr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    @property
    def n(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class UniformBall:
    """Uniform law on the n-dimensional ball of the given radius."""

    n: int
    radius: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")


@dataclass(frozen=True, eq=False)
class TabulatedScalarPdf:
    """Scalar density tabulated on a grid; trapezoidal normalization enforced."""

    grid: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if g.ndim != 1 or g.shape != d.shape:
            raise ValueError("grid and density must be equal-length 1-D arrays")
        if g.size < _MIN_GRID:
            raise ValueError(f"grid must contain >= {_MIN_GRID} points, got {g.size}")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(d < 0):
            raise ValueError("density must be nonnegative")
        mass = np.trapz(d, g)
        if abs(mass - 1.0) > _PDF_TOL:
            raise ValueError(f"density must integrate to 1, got {mass!r}")
        d = d / mass
        g.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "density", d)


InputDistribution = Union[
    ScalarGaussian, VectorGaussian, DiscreteAtoms, UniformBall, TabulatedScalarPdf
]


@dataclass(frozen=True)
class ChannelConfig:
    n: int
    snr: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if self.snr < 0:
            raise ValueError(f"snr must be nonnegative, got {self.snr}")


@dataclass(frozen=True)
class DistanceStats:
    """Nearest-neighbour distances of a discrete atom set."""

    d_min: float
    d_max: float
    per_atom: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# construction


def build_distribution(spec: dict) -> InputDistribution:
    """Build a validated distribution from a flat key/value record.

    Recognized kinds: gaussian (sigma2, n), atoms (atoms = [[point..., prob]]),
    ball (n, radius), tabulated (grid, density).
    """
    kind = spec.get("kind")
    if kind == "gaussian":
        n = int(spec.get("n", 1))
        sigma2 = float(spec.get("sigma2", 1.0))
        return ScalarGaussian(sigma2) if n == 1 else VectorGaussian(n, sigma2)
    if kind == "atoms":
        rows = spec["atoms"]
        pts = [np.atleast_1d(np.asarray(row[:-1], dtype=float)) for row in rows]
        probs = [float(row[-1]) for row in rows]
        return DiscreteAtoms(np.vstack(pts), np.asarray(probs))
    if kind == "ball":
        return UniformBall(int(spec.get("n", 1)), float(spec["radius"]))
    if kind == "tabulated":
        return TabulatedScalarPdf(np.asarray(spec["grid"]), np.asarray(spec["density"]))
    raise ValueError(f"unknown distribution kind {kind!r}")


def bpsk() -> DiscreteAtoms:
    return DiscreteAtoms(np.array([[-1.0], [1.0]]), np.array([0.5, 0.5]))


def pam(n_points: int, unit_power: bool = False) -> DiscreteAtoms:
    """Equiprobable, equally spaced symmetric constellation with n_points atoms.

    With unit_power=True the spacing is chosen so the average power is 1.
    """
    if n_points < 2:
        raise ValueError(f"need at least 2 points, got {n_points}")
    levels = 2.0 * np.arange(n_points) - (n_points - 1)
    if unit_power:
        levels = levels / np.sqrt(np.mean(levels**2))
    return DiscreteAtoms(levels[:, None], np.full(n_points, 1.0 / n_points))


def pam4() -> DiscreteAtoms:
    return pam(4)


def asym_pair() -> DiscreteAtoms:
    return DiscreteAtoms(np.array([[-3.0], [1.0]]), np.array([0.01, 0.99]))


def pmone_vector(n: int) -> DiscreteAtoms:
    """All-ones versus all-minus-ones antipodal pair in n dimensions."""
    return DiscreteAtoms(np.vstack([np.ones(n), -np.ones(n)]), np.array([0.5, 0.5]))


# ---------------------------------------------------------------------------
# basic descriptors


def dimension(dist: InputDistribution) -> int:
    if isinstance(dist, ScalarGaussian):
        return 1
    if isinstance(dist, VectorGaussian):
        return dist.n
    if isinstance(dist, DiscreteAtoms):
        return dist.n
    if isinstance(dist, UniformBall):
        return dist.n
    if isinstance(dist, TabulatedScalarPdf):
        return 1
    raise TypeError(f"unsupported distribution {type(dist)!r}")


# unbounded supports are truncated at this many standard deviations
GAUSSIAN_SUPPORT_SIGMAS = 10.0


def support_bounds(dist: InputDistribution) -> tuple[float, float]:
    """Scalar support interval; Gaussians are truncated at 10 sigma."""
    if isinstance(dist, ScalarGaussian):
        s = GAUSSIAN_SUPPORT_SIGMAS * np.sqrt(dist.sigma2)
        return -s, s
    if isinstance(dist, DiscreteAtoms):
        if dist.n != 1:
            raise ValueError("scalar support requested for a vector atom set")
        x = dist.points[:, 0]
        return float(x.min()), float(x.max())
    if isinstance(dist, UniformBall):
        if dist.n != 1:
            raise ValueError("scalar support requested for a vector ball")
        return -dist.radius, dist.radius
    if isinstance(dist, TabulatedScalarPdf):
        return float(dist.grid[0]), float(dist.grid[-1])
    raise TypeError(f"no scalar support for {type(dist)!r}")


def norm_moment(dist: InputDistribution, p: float) -> float:
    """Per-dimension p-th norm moment (1/n) E[(sum X_i^2)^(p/2)] of the input."""
    if isinstance(dist, ScalarGaussian):
        return dist.sigma2 ** (p / 2) * specfun.gaussian_norm_moment(1, p)
    if isinstance(dist, VectorGaussian):
        return dist.sigma2 ** (p / 2) * specfun.gaussian_norm_moment(dist.n, p)
    if isinstance(dist, DiscreteAtoms):
        sq = np.sum(dist.points**2, axis=1)
        return float(np.dot(dist.probs, sq ** (p / 2))) / dist.n
    if isinstance(dist, UniformBall):
        return specfun.uniform_ball_moment(dist.n, p, dist.radius)
    if isinstance(dist, TabulatedScalarPdf):
        return float(np.trapz(np.abs(dist.grid) ** p * dist.density, dist.grid))
    raise TypeError(f"unsupported distribution {type(dist)!r}")


def variance(dist: InputDistribution) -> float:
    """Per-dimension variance about the mean (used by the linear-estimator bound)."""
    if isinstance(dist, (ScalarGaussian, VectorGaussian)):
        return dist.sigma2
    if isinstance(dist, DiscreteAtoms):
        mean = dist.probs @ dist.points
        sq = np.sum((dist.points - mean) ** 2, axis=1)
        return float(np.dot(dist.probs, sq)) / dist.n
    if isinstance(dist, UniformBall):
        return dist.radius**2 / (dist.n + 2)
    if isinstance(dist, TabulatedScalarPdf):
        m = float(np.trapz(dist.grid * dist.density, dist.grid))
        return float(np.trapz((dist.grid - m) ** 2 * dist.density, dist.grid))
    raise TypeError(f"unsupported distribution {type(dist)!r}")


# ---------------------------------------------------------------------------
# sampling


def sample_channel(
    dist: InputDistribution,
    ch: ChannelConfig,
    count: int,
    seed: int = DEFAULT_SEED,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw paired (X, Y) samples, deterministically for a given seed.

    Returns arrays of shape (count, n).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    n = dimension(dist)
    if n != ch.n:
        raise ValueError(f"distribution dimension {n} != channel dimension {ch.n}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    x = sample_input(dist, count, rng)
    z = rng.standard_normal((count, n))
    y = np.sqrt(ch.snr) * x + z
    return x, y


def sample_input(dist: InputDistribution, count: int, rng: np.random.Generator) -> np.ndarray:
    n = dimension(dist)
    if isinstance(dist, (ScalarGaussian, VectorGaussian)):
        return np.sqrt(dist.sigma2) * rng.standard_normal((count, n))
    if isinstance(dist, DiscreteAtoms):
        idx = rng.choice(dist.points.shape[0], size=count, p=dist.probs)
        return dist.points[idx]
    if isinstance(dist, UniformBall):
        g = rng.standard_normal((count, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radii = dist.radius * rng.random(count) ** (1.0 / n)
        return g * radii[:, None]
    if isinstance(dist, TabulatedScalarPdf):
        cdf = np.concatenate([[0.0], np.cumsum(np.diff(dist.grid) * 0.5 * (dist.density[1:] + dist.density[:-1]))])
        cdf /= cdf[-1]
        u = rng.random(count)
        return np.interp(u, cdf, dist.grid)[:, None]
    raise TypeError(f"unsupported distribution {type(dist)!r}")


# ---------------------------------------------------------------------------
# scalar posteriors

_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


@dataclass(frozen=True, eq=False)
class DiscretePosterior:
    atoms: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class GaussianPosterior:
    mean: float
    var: float


@dataclass(frozen=True, eq=False)
class GridPosterior:
    grid: np.ndarray
    weights: np.ndarray  # density values, trapezoid-normalized


Posterior = Union[DiscretePosterior, GaussianPosterior, GridPosterior]


def _log_softmax(logw: np.ndarray) -> np.ndarray:
    m = np.max(logw)
    w = np.exp(logw - m)
    return w / w.sum()


def posterior_scalar(dist: InputDistribution, snr: float, y: float) -> Posterior:
    """Law of X given Y = y for a scalar input; Bayes weights in log domain."""
    if dimension(dist) != 1:
        raise ValueError("posterior_scalar requires a one-dimensional input")
    rs = np.sqrt(snr)
    if isinstance(dist, ScalarGaussian):
        s2 = dist.sigma2
        return GaussianPosterior(
            mean=s2 * rs * y / (1.0 + s2 * snr), var=s2 / (1.0 + s2 * snr)
        )
    if isinstance(dist, DiscreteAtoms):
        x = dist.points[:, 0]
        logw = np.log(dist.probs) - 0.5 * (y - rs * x) ** 2
        return DiscretePosterior(atoms=x, weights=_log_softmax(logw))
    if isinstance(dist, (TabulatedScalarPdf, UniformBall)):
        if isinstance(dist, UniformBall):
            grid = np.linspace(-dist.radius, dist.radius, 513)
            dens = np.full(grid.shape, 1.0 / (2 * dist.radius))
        else:
            grid, dens = dist.grid, dist.density
        with np.errstate(divide="ignore"):
            logw = np.log(dens) - 0.5 * (y - rs * grid) ** 2
        m = np.max(logw)
        w = np.exp(logw - m)
        mass = np.trapz(w, grid)
        return GridPosterior(grid=grid, weights=w / mass)
    raise TypeError(f"unsupported distribution {type(dist)!r}")


def posterior_mean_var(post: Posterior) -> tuple[float, float]:
    if isinstance(post, GaussianPosterior):
        return post.mean, post.var
    if isinstance(post, DiscretePosterior):
        m = float(np.dot(post.weights, post.atoms))
        v = float(np.dot(post.weights, (post.atoms - m) ** 2))
        return m, v
    if isinstance(post, GridPosterior):
        m = float(np.trapz(post.grid * post.weights, post.grid))
        v = float(np.trapz((post.grid - m) ** 2 * post.weights, post.grid))
        return m, v
    raise TypeError(f"unsupported posterior {type(post)!r}")


def output_density(dist: InputDistribution, snr: float, y: np.ndarray) -> np.ndarray:
    """Marginal density of Y = sqrt(snr) X + Z for scalar inputs."""
    if dimension(dist) != 1:
        raise ValueError("output_density requires a one-dimensional input")
    y = np.asarray(y, dtype=float)
    rs = np.sqrt(snr)
    if isinstance(dist, ScalarGaussian):
        v = 1.0 + dist.sigma2 * snr
        return np.exp(-(y**2) / (2 * v)) / np.sqrt(2 * np.pi * v)
    if isinstance(dist, DiscreteAtoms):
        x = dist.points[:, 0]
        comp = np.exp(-((y[..., None] - rs * x) ** 2) / 2) / np.sqrt(2 * np.pi)
        return comp @ dist.probs
    if isinstance(dist, (TabulatedScalarPdf, UniformBall)):
        if isinstance(dist, UniformBall):
            grid = np.linspace(-dist.radius, dist.radius, 513)
            dens = np.full(grid.shape, 1.0 / (2 * dist.radius))
        else:
            grid, dens = dist.grid, dist.density
        kern = np.exp(-((y[..., None] - rs * grid) ** 2) / 2) / np.sqrt(2 * np.pi)
        return np.trapz(kern * dens, grid, axis=-1)
    raise TypeError(f"unsupported distribution {type(dist)!r}")


def posterior_atoms_vectorized(
    dist: DiscreteAtoms, snr: float, y: np.ndarray
) -> np.ndarray:
    """Posterior weight matrix, shape (samples, atoms), for batched y of shape (samples, n)."""
    rs = np.sqrt(snr)
    y = np.atleast_2d(y)
    # log p_i - ||y - rs x_i||^2 / 2, row-normalized in log domain
    d2 = np.sum((y[:, None, :] - rs * dist.points[None, :, :]) ** 2, axis=2)
    logw = np.log(dist.probs)[None, :] - 0.5 * d2
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    return w / w.sum(axis=1, keepdims=True)


def distance_stats(dist: DiscreteAtoms) -> DistanceStats:
    """Per-atom nearest-neighbour distances and the global min/max pairwise distance."""
    if not isinstance(dist, DiscreteAtoms):
        raise TypeError("distance_stats requires a discrete atom set")
    pts = dist.points
    n_atoms = pts.shape[0]
    if n_atoms < 2:
        raise ValueError("need at least 2 atoms")
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    off = d + np.diag(np.full(n_atoms, np.inf))
    per_atom = off.min(axis=1)
    return DistanceStats(
        d_min=float(per_atom.min()), d_max=float(d.max()), per_atom=per_atom
    )
