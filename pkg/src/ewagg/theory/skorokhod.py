"""Two-point multiplier behind the symmetric-noise oracle inequalities.

For symmetric ``xi`` and ``eta`` independent of it, ``zeta = xi * eta`` has
``E[zeta | xi] = 0`` and ``xi + 2*gamma*zeta`` has the law of
``(1 + 2*gamma) * xi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from ..core import Correlated
from ..errors import ArgumentError, ConfigurationError


@dataclass(frozen=True)
class EtaSpec:
    """``eta = 1`` w.p. ``1 - gamma/(1+2 gamma)``, else ``-1 - 1/gamma``."""

    gamma: float | Fraction

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigurationError("gamma must be positive")

    @property
    def values(self) -> tuple:
        return (1, -1 - 1 / self.gamma)

    @property
    def probs(self) -> tuple:
        q = self.gamma / (1 + 2 * self.gamma)
        return (1 - q, q)

    def mean(self):
        """Exact when ``gamma`` is a ``Fraction``."""
        (a, b), (p, q) = self.values, self.probs
        return a * p + b * q

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        p_neg = float(self.probs[1])
        neg = rng.random(size) < p_neg
        return np.where(neg, float(self.values[1]), 1.0)


@dataclass(frozen=True)
class SkorokhodReport:
    gamma: float
    samples: int
    cdf_distance: float
    conditional_means: np.ndarray
    conditional_se: np.ndarray
    eta_mean: float
    eta_se: float

    @property
    def max_conditional_z(self) -> float:
        se = np.where(self.conditional_se > 0, self.conditional_se, np.inf)
        return float(np.max(np.abs(self.conditional_means) / se))


def skorokhod_check(dist, gamma: float, n_samples: int, rng: np.random.Generator, bins: int = 20) -> SkorokhodReport:
    """Sample ``(xi, eta)``, compare ``xi + 2 gamma zeta`` with ``(1 + 2 gamma) xi'``.

    ``cdf_distance`` is the two-sample Kolmogorov-Smirnov statistic against an
    independent scaled sample; ``conditional_means`` are the means of ``zeta``
    in ``bins`` equal-count bins of ``xi``.
    """
    if isinstance(dist, Correlated) or not getattr(dist, "is_symmetric", True):
        raise ArgumentError(f"{type(dist).__name__} is not a symmetric scalar law")
    if not gamma > 0:
        raise ConfigurationError("gamma must be positive")
    spec = EtaSpec(float(gamma))
    xi = dist.draw(1, n_samples, rng)[0]
    eta = spec.sample(n_samples, rng)
    zeta = xi * eta
    lhs = xi + 2 * gamma * zeta
    ref = (1 + 2 * gamma) * dist.draw(1, n_samples, rng)[0]
    ks = stats.ks_2samp(lhs, ref).statistic

    order = np.argsort(xi, kind="stable")
    means, ses = [], []
    for idx in np.array_split(order, bins):
        z = zeta[idx]
        means.append(z.mean())
        ses.append(z.std(ddof=1) / np.sqrt(z.size))
    return SkorokhodReport(
        gamma=float(gamma),
        samples=int(n_samples),
        cdf_distance=float(ks),
        conditional_means=np.array(means),
        conditional_se=np.array(ses),
        eta_mean=float(eta.mean()),
        eta_se=float(eta.std(ddof=1) / np.sqrt(n_samples)),
    )
