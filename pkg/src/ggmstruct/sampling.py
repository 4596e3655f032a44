"""Sampling from a GGM and forming empirical covariance matrices."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import FactorizationFailure, InsufficientSamples
from .model import GgmInstance


class MeanMode(str, enum.Enum):
    KNOWN_ZERO_MEAN = "known-zero-mean"
    CENTERED = "centered"


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator for ``seed``.

    Experiments give every trial its own integer seed (``base_seed + trial``),
    so each trial owns an independent stream.
    """
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SampleSet:
    data: np.ndarray
    seed: object = None
    mean_mode: MeanMode = MeanMode.KNOWN_ZERO_MEAN

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1:
            raise ValueError(f"samples must be a non-empty 2-D array, got shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "mean_mode", MeanMode(self.mean_mode))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class CovarianceEstimate:
    sigma_hat: np.ndarray
    n: int
    mean_mode: MeanMode = MeanMode.KNOWN_ZERO_MEAN

    @property
    def p(self) -> int:
        return self.sigma_hat.shape[0]


def covariance_root(sigma: np.ndarray) -> np.ndarray:
    """Symmetric square root of a covariance matrix, negative eigenvalues clipped."""
    sigma = np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(sigma)):
        raise FactorizationFailure("covariance has non-finite entries")
    w, v = np.linalg.eigh(sigma)
    scale = max(abs(w[-1]), abs(w[0]))
    if w[0] < -1e-8 * scale:
        raise FactorizationFailure(
            f"covariance is indefinite (smallest eigenvalue {w[0]:.3e}, largest {w[-1]:.3e})"
        )
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return 0.5 * (root + root.T)


def sample(instance: GgmInstance, n: int, seed=None, mean_mode=MeanMode.KNOWN_ZERO_MEAN) -> SampleSet:
    """Draw ``n`` i.i.d. rows from ``N(mu, sigma)``.

    Identical ``(instance, n, seed)`` give bit-identical data.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    root = covariance_root(instance.sigma)
    z = make_rng(seed).standard_normal((n, instance.p))
    data = z @ root + instance.mu
    return SampleSet(data=data, seed=seed, mean_mode=mean_mode)


def empirical_covariance(samples: SampleSet) -> CovarianceEstimate:
    """Known-zero-mean ``X^T X / n`` or the centered unbiased estimator."""
    x = samples.data
    n = samples.n
    if samples.mean_mode is MeanMode.CENTERED:
        if n < 2:
            raise InsufficientSamples("centered covariance needs at least 2 samples")
        x = x - x.mean(axis=0)
        denom = n - 1
    else:
        denom = n
    s = (x.T @ x) / denom
    s = 0.5 * (s + s.T)
    return CovarianceEstimate(sigma_hat=s, n=n, mean_mode=samples.mean_mode)


def write_samples_csv(samples: SampleSet, path_or_file, header: bool = False) -> None:
    """One row per sample at 17 significant digits, which round-trips exactly."""
    if hasattr(path_or_file, "write"):
        _write_rows(samples, path_or_file, header)
        return
    with open(path_or_file, "w") as fh:
        _write_rows(samples, fh, header)


def _write_rows(samples, fh, header):
    if header:
        fh.write(",".join(f"x{k + 1}" for k in range(samples.p)) + "\n")
    for row in samples.data:
        fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def read_samples_csv(path, mean_mode=MeanMode.KNOWN_ZERO_MEAN) -> SampleSet:
    """Read a samples CSV, with or without an ``x1..xp`` header line."""
    with open(path) as fh:
        first = fh.readline()
    skip = 1 if first and first.strip().split(",")[0].strip().lower().startswith("x") else 0
    data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    return SampleSet(data=data, mean_mode=mean_mode)
