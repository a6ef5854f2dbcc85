"""Tempered posteriors: exact discrete EWA and Langevin Monte Carlo.

The tempered posterior is ``pi_n(F) ~ exp(-loss(F, Y) / (2 tau)) pi_0(F)``.
For a finite dictionary its mean is computed exactly; for the spectral
Student prior it is approximated by averaging unadjusted Langevin chains.

All chain arithmetic runs on stacked ``(chains, K, n)`` arrays so a single
chain and a batch of chains go through identical floating-point code.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import as_label_matrix, empirical_loss
from .errors import ArgumentError, ConfigurationError, DimensionError, DivergenceError
from .prior import PriorConfig, _gram, log_prior_unnormalized, ridge_solve, sample_prior

GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1
INIT_MODES = ("zeros", "data", "prior_draw")


@dataclass(frozen=True)
class PosteriorConfig:
    tau: float
    prior: PriorConfig

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigurationError("temperature tau must be positive and finite")

    @property
    def K(self) -> int:
        return self.prior.K

    @property
    def n(self) -> int:
        return self.prior.n


@dataclass(frozen=True)
class LmcConfig:
    """Constant-step Langevin settings.

    ``gd_steps = 0`` uses the exact linear solve for the prior gradient.
    ``add_noise = False`` turns the chain into plain gradient ascent, which is
    only meant for diagnostics.
    """

    h: float
    k_max: int
    N: int = 1
    gd_steps: int = 0
    seed: int = 0
    init: str = "data"
    add_noise: bool = True
    threads: int = 1
    chunk: int = 64

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ConfigurationError("step size h must be positive")
        if self.k_max < 1 or self.N < 1:
            raise ConfigurationError("k_max and N must be at least 1")
        if self.gd_steps < 0:
            raise ConfigurationError("gd_steps must be >= 0")
        if self.init not in INIT_MODES:
            raise ConfigurationError(f"init must be one of {INIT_MODES}")
        if not 0 <= self.seed <= _MASK64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")
        if self.threads < 1 or self.chunk < 1:
            raise ConfigurationError("threads and chunk must be >= 1")


@dataclass(frozen=True, eq=False)
class DiscreteDictionary:
    """Finite support of a prior: stacked candidates and their masses."""

    candidates: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.array(self.candidates, dtype=np.float64)
        if c.ndim != 3 or c.shape[0] < 1:
            raise DimensionError("candidates must stack into a (J, K, n) array")
        if not np.all(np.isfinite(c)):
            raise ArgumentError("candidates have non-finite entries")
        w = np.full(c.shape[0], 1.0 / c.shape[0]) if self.weights is None else np.array(self.weights, dtype=float)
        if w.shape != (c.shape[0],):
            raise DimensionError("one weight per candidate is required")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ConfigurationError("weights must be positive and sum to 1")
        c.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "candidates", c)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.candidates.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.candidates.shape[1:]

    def losses(self, Y) -> np.ndarray:
        d = self.candidates - np.asarray(Y, dtype=np.float64)
        return np.einsum("jkn,jkn->j", d, d) / self.shape[1]


# --------------------------------------------------------------------------
# log-density and gradient


def _check_pair(F, Y, cfg: PosteriorConfig) -> tuple[np.ndarray, np.ndarray]:
    F = as_label_matrix(F, "F")
    Y = as_label_matrix(Y, "Y")
    if F.shape != Y.shape or F.shape != cfg.prior.shape:
        raise DimensionError(f"F {F.shape}, Y {Y.shape}, config {cfg.prior.shape} disagree")
    return F, Y


def log_posterior_unnormalized(F, Y, cfg: PosteriorConfig) -> float:
    F, Y = _check_pair(F, Y, cfg)
    return -empirical_loss(F, Y) / (2.0 * cfg.tau) + log_prior_unnormalized(F, cfg.prior)


def _spectral_norm_sq(G: np.ndarray, iters: int = 20) -> np.ndarray:
    # power iteration on the stacked Gram matrices F F^T, fixed start vector
    v = np.ones(G.shape[:-1] + (1,)) / math.sqrt(G.shape[-1])
    est = np.zeros(G.shape[:-2])
    for _ in range(iters):
        w = G @ v
        est = np.linalg.norm(w[..., 0], axis=-1)
        v = w / np.where(est > 0, est, 1.0)[..., None, None]
    return est


def _ridge_gd(F: np.ndarray, lam: float, steps: int) -> np.ndarray:
    G = _gram(F, 0.0)
    # half-objective 0.5*||I - F^T M||^2 + 0.5*lam^2*||M||^2 has gradient
    # (F F^T + lam^2 I) M - F, Lipschitz in M with constant ||F||^2 + lam^2
    lip = _spectral_norm_sq(G) + lam * lam
    step = (1.0 / lip)[..., None, None]
    M = np.zeros_like(F)
    for _ in range(steps):
        M = M - step * (G @ M + lam * lam * M - F)
    return M


def solve_ridge_m(F, lam: float, gd_steps: int = 0) -> np.ndarray:
    """``(lam^2 I + F F^T)^{-1} F``, exactly or by ``gd_steps`` gradient steps.

    The iterative route minimizes ``||I_n - F^T M||_F^2 + lam^2 ||M||_F^2``
    from ``M = 0`` with step ``1 / (||F||^2 + lam^2)`` on the half objective.
    ``F`` may be a single ``(K, n)`` matrix or a ``(chains, K, n)`` stack.
    """
    if not lam > 0:
        raise ConfigurationError("lambda must be positive")
    F = np.asarray(F, dtype=np.float64)
    if gd_steps == 0:
        return ridge_solve(F, lam)
    return _ridge_gd(F, lam, int(gd_steps))


def _grad_stack(F: np.ndarray, Y: np.ndarray, cfg: PosteriorConfig, gd_steps: int) -> np.ndarray:
    K, n = cfg.prior.shape
    data = (Y - F) / (n * cfg.tau)
    return data - (n + K + 2) * solve_ridge_m(F, cfg.prior.lam, gd_steps)


def grad_log_posterior(F, Y, cfg: PosteriorConfig, gd_steps: int = 0) -> np.ndarray:
    F, Y = _check_pair(F, Y, cfg)
    return _grad_stack(F[None], Y, cfg, gd_steps)[0]


# --------------------------------------------------------------------------
# Langevin chains


def chain_seed(base: int, index: int) -> int:
    """Seed of chain ``index``: ``base XOR (golden-ratio increment * index) mod 2^64``."""
    return (int(base) ^ ((GOLDEN * int(index)) & _MASK64)) & _MASK64


def _run_chains(Y: np.ndarray, cfg: PosteriorConfig, lmc: LmcConfig, indices) -> np.ndarray:
    gens = [np.random.default_rng(chain_seed(lmc.seed, i)) for i in indices]
    C = len(gens)
    K, n = Y.shape
    if lmc.init == "zeros":
        F = np.zeros((C, K, n))
    elif lmc.init == "data":
        F = np.repeat(Y[None], C, axis=0)
    else:
        F = np.stack([sample_prior(cfg.prior, g) for g in gens])
    scale = math.sqrt(2.0 * lmc.h)
    W = np.empty((C, K, n))
    for k in range(lmc.k_max):
        # overflow is reported below as a DivergenceError, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            F = F + lmc.h * _grad_stack(F, Y, cfg, lmc.gd_steps)
        if lmc.add_noise:
            for c, g in enumerate(gens):
                g.standard_normal(out=W[c])
            F = F + scale * W
        if not np.isfinite(F).all():
            bad = int(np.flatnonzero(~np.isfinite(F).reshape(C, -1).all(axis=1))[0])
            raise DivergenceError(step=k, chain=int(indices[bad]))
    return F


def lmc_chain(Y, cfg: PosteriorConfig, lmc: LmcConfig, index: int = 0) -> np.ndarray:
    """Final iterate of one Langevin chain (chain ``index`` of the seed family)."""
    Y = as_label_matrix(Y, "Y")
    if Y.shape != cfg.prior.shape:
        raise DimensionError(f"Y is {Y.shape}, config expects {cfg.prior.shape}")
    try:
        return _run_chains(Y, cfg, lmc, [index])[0]
    except DivergenceError as exc:
        raise DivergenceError(exc.step) from None


def lmc_chains(Y, cfg: PosteriorConfig, lmc: LmcConfig) -> np.ndarray:
    """Final iterates of chains ``0 .. N-1``, stacked as ``(N, K, n)``."""
    Y = as_label_matrix(Y, "Y")
    if Y.shape != cfg.prior.shape:
        raise DimensionError(f"Y is {Y.shape}, config expects {cfg.prior.shape}")
    blocks = [range(s, min(s + lmc.chunk, lmc.N)) for s in range(0, lmc.N, lmc.chunk)]
    if lmc.threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=lmc.threads) as pool:
            parts = list(pool.map(lambda b: _run_chains(Y, cfg, lmc, list(b)), blocks))
    else:
        parts = [_run_chains(Y, cfg, lmc, list(b)) for b in blocks]
    return np.concatenate(parts, axis=0)


def average_chains(samples: np.ndarray) -> np.ndarray:
    """Mean over the first axis, summed in index order."""
    total = np.zeros(samples.shape[1:])
    for s in samples:
        total += s
    return total / samples.shape[0]


def mc_ewa(Y, cfg: PosteriorConfig, lmc: LmcConfig) -> np.ndarray:
    """Monte-Carlo EWA: average of ``lmc.N`` independent chain outputs."""
    return average_chains(lmc_chains(Y, cfg, lmc))


def perturb_labels(Y, B_xi: float, rng: np.random.Generator) -> np.ndarray:
    """``Y + zeta`` with ``zeta`` iid uniform on ``[-B_xi, B_xi]``."""
    if not B_xi > 0:
        raise ConfigurationError("perturbation bound B_xi must be positive")
    Y = as_label_matrix(Y, "Y")
    return Y + rng.uniform(-B_xi, B_xi, size=Y.shape)


def newa(Y, B_xi: float, cfg: PosteriorConfig, lmc: LmcConfig, rng: np.random.Generator) -> np.ndarray:
    """Noisy EWA: one uniform perturbation of the labels, then MC-EWA on it."""
    return mc_ewa(perturb_labels(Y, B_xi, rng), cfg, lmc)


# --------------------------------------------------------------------------
# finite dictionaries


def gibbs_log_weights(losses, prior_weights, tau: float) -> np.ndarray:
    """Normalized log Gibbs weights ``log w_j``, max-subtracted before exponentiating."""
    if not tau > 0:
        raise ConfigurationError("tau must be positive")
    losses = np.asarray(losses, dtype=float)
    # subtracting the smallest loss first makes the weights blind to a common shift
    z = np.log(np.asarray(prior_weights, dtype=float)) - (losses - losses.min()) / (2.0 * tau)
    z = z - z.max()
    return z - logsumexp(z)


def gibbs_weights(losses, prior_weights, tau: float) -> np.ndarray:
    w = np.exp(gibbs_log_weights(losses, prior_weights, tau))
    assert w.sum() > 0, "all Gibbs weights underflowed"
    return w


def discrete_ewa(dictionary: DiscreteDictionary, Y, tau: float) -> np.ndarray:
    """Exact EWA on a finite dictionary."""
    Y = as_label_matrix(Y, "Y")
    if Y.shape != dictionary.shape:
        raise DimensionError(f"Y is {Y.shape}, dictionary holds {dictionary.shape}")
    w = gibbs_weights(dictionary.losses(Y), dictionary.weights, tau)
    return np.tensordot(w, dictionary.candidates, axes=1)


def dv_objective(p, losses, prior_weights, tau: float) -> float:
    """``sum_j p_j loss_j / 2 + tau * KL(p || prior)`` on a finite support."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(prior_weights, dtype=float)
    nz = p > 0
    kl = float(np.sum(p[nz] * np.log(p[nz] / q[nz])))
    return float(0.5 * np.dot(p, losses) + tau * kl)
