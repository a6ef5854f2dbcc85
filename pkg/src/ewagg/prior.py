"""Spectral scaled Student prior on K x n matrices.

The density is proportional to ``det(lam^2 I_K + F F^T)^{-(n+K+2)/2}``,
equivalently ``prod_j (lam^2 + s_j(F)^2)^{-(n+K+2)/2}`` over the singular
values of ``F``.  It is the matrix-variate t law with 3 degrees of freedom,
which gives an exact sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import as_label_matrix
from .errors import ConfigurationError, DimensionError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class PriorConfig:
    lam: float
    K: int
    n: int

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ConfigurationError("prior scale lambda must be positive and finite")
        if self.K < 1 or self.n < 1:
            raise ConfigurationError("K and n must be positive")

    @property
    def exponent(self) -> float:
        """Power ``(n+K+2)/2`` applied to the determinant."""
        return (self.n + self.K + 2) / 2.0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.K, self.n)


def _check(F, cfg: PriorConfig) -> np.ndarray:
    F = as_label_matrix(F, "F")
    if F.shape != cfg.shape:
        raise DimensionError(f"F is {F.shape}, prior expects {cfg.shape}")
    return F


def _gram(F: np.ndarray, lam: float) -> np.ndarray:
    G = F @ np.swapaxes(F, -1, -2)
    idx = np.arange(F.shape[-2])
    G[..., idx, idx] += lam * lam
    return G


def log_prior_unnormalized(F, cfg: PriorConfig) -> float:
    F = _check(F, cfg)
    c, _ = linalg.cho_factor(_gram(F, cfg.lam), lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(c)))
    return float(-cfg.exponent * logdet)


def log_prior_spectral(F, cfg: PriorConfig) -> float:
    """Same value computed from the singular values of ``F``."""
    F = _check(F, cfg)
    s = np.zeros(cfg.K)
    sv = np.linalg.svd(F, compute_uv=False)
    s[: sv.size] = sv
    return float(-cfg.exponent * np.sum(np.log(cfg.lam**2 + s * s)))


def ridge_solve(F: np.ndarray, lam: float) -> np.ndarray:
    """Exact ``(lam^2 I + F F^T)^{-1} F``; ``F`` may carry leading batch axes."""
    return np.linalg.solve(_gram(F, lam), F)


def grad_log_prior(F, cfg: PriorConfig) -> np.ndarray:
    F = _check(F, cfg)
    return -(cfg.n + cfg.K + 2) * ridge_solve(F, cfg.lam)


def sample_prior(cfg: PriorConfig, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Exact draws from the prior.

    Conditionally on a Wishart matrix ``S ~ W_K(K + 2, I)`` the columns are
    iid ``N(0, lam^2 S^{-1})``; mixing over ``S`` gives the matrix t law with
    3 degrees of freedom.  ``S = A A^T`` is drawn by the Bartlett
    decomposition and the columns are ``lam * A^{-T} z``.

    Returns a ``(K, n)`` array, or ``(size, K, n)`` when ``size`` is given.
    """
    K, n = cfg.shape
    m = 1 if size is None else int(size)
    df = K + 2
    A = np.zeros((m, K, K))
    idx = np.arange(K)
    A[:, idx, idx] = np.sqrt(rng.chisquare(df - idx, size=(m, K)))
    low = np.tril_indices(K, -1)
    A[:, low[0], low[1]] = rng.standard_normal((m, low[0].size))
    Z = rng.standard_normal((m, K, n))
    F = cfg.lam * np.linalg.solve(np.swapaxes(A, -1, -2), Z)
    return F[0] if size is None else F


def numerical_rank(F, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(np.asarray(F, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def kl_shift_bound(F_bar, cfg: PriorConfig, spectral: bool = False) -> float:
    """Upper bound on KL(prior shifted by F_bar || prior).

    Default is the Frobenius form ``2r(n+K+2) log(1 + ||F_bar||_F / (sqrt(2r) lam))``;
    ``spectral=True`` gives the looser ``2r(n+K+2) log(1 + ||F_bar||_op / lam)``.
    """
    F_bar = _check(F_bar, cfg)
    r = numerical_rank(F_bar)
    if r == 0:
        return 0.0
    c = 2.0 * r * (cfg.n + cfg.K + 2)
    if spectral:
        return float(c * math.log1p(np.linalg.norm(F_bar, 2) / cfg.lam))
    return float(c * math.log1p(np.linalg.norm(F_bar) / (math.sqrt(2.0 * r) * cfg.lam)))


def kl_shift_monte_carlo(F_bar, cfg: PriorConfig, rng, draws: int = 20000) -> tuple[float, float]:
    """Monte-Carlo estimate (mean, standard error) of the shifted-prior KL.

    Uses ``KL = E_{G ~ prior}[log pi0(G) - log pi0(G + F_bar)]``; the unknown
    normalizing constant cancels.
    """
    F_bar = _check(F_bar, cfg)
    G = sample_prior(cfg, rng, size=draws)
    c1 = np.linalg.cholesky(_gram(G, cfg.lam))
    c2 = np.linalg.cholesky(_gram(G + F_bar, cfg.lam))
    ld1 = 2.0 * np.log(np.diagonal(c1, axis1=-2, axis2=-1)).sum(-1)
    ld2 = 2.0 * np.log(np.diagonal(c2, axis1=-2, axis2=-1)).sum(-1)
    vals = cfg.exponent * (ld2 - ld1)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(draws))
