"""Label matrices, the in-sample loss, noise laws and image metrics.

A label matrix is a plain ``(K, n)`` float array whose column ``i`` is the
observation vector ``Y_i`` (or ``F_i``).  Everything here is pure given an
explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ArgumentError, ConfigurationError, DimensionError

__all__ = [
    "as_label_matrix",
    "empirical_loss",
    "Gaussian",
    "Uniform",
    "Rademacher",
    "DiscreteBounded",
    "SharedMagnitudeSymmetric",
    "Correlated",
    "NoiseModel",
    "sample_noise",
    "sym_sqrt",
    "AssumptionReport",
    "check_assumption_c",
    "psnr",
]


def as_label_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty K x n matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} has non-finite entries")
    return arr


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def empirical_loss(a, b) -> float:
    """In-sample prediction error ``(1/n) * ||a - b||_F^2``."""
    a = as_label_matrix(a, "a")
    b = as_label_matrix(b, "b")
    _same_shape(a, b)
    d = a - b
    return float(np.sum(d * d) / a.shape[1])


# --------------------------------------------------------------------------
# noise models


@dataclass(frozen=True)
class Gaussian:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError("Gaussian noise needs sigma > 0")

    entry_bound = math.inf
    is_discrete = False

    @property
    def variance(self) -> float:
        return self.sigma**2

    def draw(self, K: int, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.sigma * rng.standard_normal((K, n))


@dataclass(frozen=True)
class Uniform:
    """Uniform on ``[-b, b]``."""

    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise ConfigurationError("Uniform noise needs b > 0")

    is_discrete = False

    @property
    def entry_bound(self) -> float:
        return self.b

    @property
    def variance(self) -> float:
        return self.b**2 / 3.0

    def draw(self, K, n, rng):
        return rng.uniform(-self.b, self.b, size=(K, n))


@dataclass(frozen=True)
class Rademacher:
    """``+a`` or ``-a`` with probability one half each."""

    a: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigurationError("Rademacher noise needs a > 0")

    is_discrete = True

    @property
    def entry_bound(self) -> float:
        return self.a

    @property
    def variance(self) -> float:
        return self.a**2

    def draw(self, K, n, rng):
        return self.a * (2.0 * rng.integers(0, 2, size=(K, n)) - 1.0)


@dataclass(frozen=True)
class DiscreteBounded:
    """Finite symmetric law: ``support[k]`` with mass ``probs[k]``."""

    support: tuple
    probs: tuple

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "support", tuple(s.tolist()))
        object.__setattr__(self, "probs", tuple(p.tolist()))
        if s.ndim != 1 or s.shape != p.shape or s.size == 0:
            raise ConfigurationError("support and probs must be equal-length vectors")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ConfigurationError("probabilities must be nonnegative and sum to 1")
        if not np.all(np.isfinite(s)):
            raise ConfigurationError("support values must be finite")
        # symmetric about 0: the mass at x equals the mass at -x
        mass = {}
        for v, q in zip(s, p):
            mass[v] = mass.get(v, 0.0) + q
        for v, q in mass.items():
            if abs(mass.get(-v, 0.0) - q) > 1e-12:
                raise ConfigurationError("discrete support must be symmetric about 0")

    is_discrete = True

    @property
    def entry_bound(self) -> float:
        return float(np.max(np.abs(self.support)))

    @property
    def variance(self) -> float:
        s = np.asarray(self.support)
        return float(np.dot(self.probs, s * s))

    def draw(self, K, n, rng):
        idx = rng.choice(len(self.support), size=(K, n), p=np.asarray(self.probs))
        return np.asarray(self.support)[idx]


@dataclass(frozen=True)
class SharedMagnitudeSymmetric:
    """Column-sign-symmetric noise with strong dependence across columns.

    One magnitude vector ``m = |base draw|`` of length K is shared by every
    column, and column ``i`` is multiplied by its own Rademacher sign, so
    ``xi_i = eps_i * m``.  Flipping any column sign leaves the law unchanged.
    """

    base: "NoiseModel"

    is_discrete = False

    @property
    def entry_bound(self) -> float:
        return self.base.entry_bound

    @property
    def variance(self) -> float:
        return self.base.variance

    def draw(self, K, n, rng):
        mags = np.abs(self.base.draw(K, 1, rng))
        signs = 2.0 * rng.integers(0, 2, size=(1, n)) - 1.0
        return mags * signs


@dataclass(frozen=True, eq=False)
class Correlated:
    """``xi = cov^{1/2} @ xi_bar`` with ``xi_bar`` drawn from ``base``."""

    cov: np.ndarray
    base: "NoiseModel"
    _root: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cov = np.array(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ConfigurationError("covariance must be a square matrix")
        if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ConfigurationError("covariance must be symmetric")
        w = np.linalg.eigvalsh(cov)
        if w.min() < -1e-10 * max(1.0, abs(w).max()):
            raise ConfigurationError("covariance must be positive semidefinite")
        cov.setflags(write=False)
        object.__setattr__(self, "cov", cov)
        root = sym_sqrt(cov)
        root.setflags(write=False)
        object.__setattr__(self, "_root", root)

    is_discrete = False

    @property
    def root(self) -> np.ndarray:
        return self._root

    @property
    def spectral_norm(self) -> float:
        return float(np.linalg.eigvalsh(self.cov).max())

    @property
    def entry_bound(self) -> float:
        # sup-norm of root @ x over ||x||_inf <= B
        return float(np.abs(self._root).sum(axis=1).max() * self.base.entry_bound)

    def draw(self, K, n, rng):
        if self.cov.shape[0] != K:
            raise ConfigurationError(f"covariance is {self.cov.shape}, expected {K}x{K}")
        return self._root @ self.base.draw(K, n, rng)


NoiseModel = Union[Gaussian, Uniform, Rademacher, DiscreteBounded, SharedMagnitudeSymmetric, Correlated]


def sample_noise(model: NoiseModel, K: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one ``K x n`` noise matrix from ``model``."""
    if K < 1 or n < 1:
        raise ConfigurationError("K and n must be positive")
    return model.draw(int(K), int(n), rng)


def sym_sqrt(cov) -> np.ndarray:
    """Symmetric PSD square root; eigenvalues below ``1e-12 * ||cov||`` are zeroed."""
    cov = np.asarray(cov, dtype=float)
    w, v = np.linalg.eigh(cov)
    tol = 1e-12 * max(abs(w).max(), 0.0)
    w = np.where(w > tol, w, 0.0)
    return (v * np.sqrt(w)) @ v.T


# --------------------------------------------------------------------------
# noise condition check


@dataclass(frozen=True)
class AssumptionReport:
    b_xi_observed: float
    l_observed: float
    holds: bool


def _max_col_norm(m: np.ndarray) -> float:
    return float(np.sqrt(np.max(np.sum(m * m, axis=0))))


def check_assumption_c(
    noise_draws: Sequence, candidates: Sequence, B_xi: float, L: float
) -> AssumptionReport:
    """Observed noise bound and dictionary diameter, both normalized by sqrt(K)."""
    if len(noise_draws) == 0 or len(candidates) == 0:
        raise ArgumentError("noise_draws and candidates must be non-empty")
    draws = [as_label_matrix(x, "noise draw") for x in noise_draws]
    cands = [as_label_matrix(c, "candidate") for c in candidates]
    shape = cands[0].shape
    for m in draws + cands:
        _same_shape(m, np.empty(shape))
    root_k = math.sqrt(shape[0])

    b_obs = max(_max_col_norm(x) for x in draws) / root_k
    l_obs = 0.0
    for a, b in itertools.combinations(cands, 2):
        l_obs = max(l_obs, _max_col_norm(a - b))
    l_obs /= root_k
    return AssumptionReport(b_obs, l_obs, bool(b_obs <= B_xi and l_obs <= L))


# --------------------------------------------------------------------------
# image quality


def psnr(reference, test, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the inputs coincide."""
    if not peak > 0:
        raise ConfigurationError("peak must be positive")
    ref = np.asarray(reference, dtype=np.float64)
    tst = np.asarray(test, dtype=np.float64)
    if ref.shape != tst.shape:
        raise DimensionError(f"shape mismatch: {ref.shape} vs {tst.shape}")
    mse = float(np.mean((ref - tst) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)
