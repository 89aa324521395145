"""Minimum mean p-th error of inputs observed through additive white Gaussian
noise: optimal estimators, error evaluation, bound catalog, and the
information-theoretic consequences, with a CSV-emitting CLI.
"""

from . import bounds, engine, estimators, infometrics, model, specfun, verify
from .engine import MmpeEstimate, evaluate_mmpe, mmpe_gaussian_closed_form, mmpe_scalar
from .model import (
    ChannelConfig,
    DiscreteAtoms,
    ScalarGaussian,
    TabulatedScalarPdf,
    UniformBall,
    VectorGaussian,
    build_distribution,
)

__all__ = [
    "bounds",
    "engine",
    "estimators",
    "infometrics",
    "model",
    "specfun",
    "verify",
    "MmpeEstimate",
    "evaluate_mmpe",
    "mmpe_scalar",
    "mmpe_gaussian_closed_form",
    "ChannelConfig",
    "DiscreteAtoms",
    "ScalarGaussian",
    "VectorGaussian",
    "UniformBall",
    "TabulatedScalarPdf",
    "build_distribution",
]

__version__ = "0.1.0"
