"""Stein profiles ``m(x) = -E[xi 1(xi <= x)]`` and ``g = m / density``.

The sup of ``g`` is the constant that sets the smallest admissible
temperature for continuous noise.  Discrete laws have no such profile.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats

from ..core import DiscreteBounded, Gaussian, Rademacher, Uniform
from ..errors import ConfigurationError, UnsupportedNoiseError

__all__ = [
    "DensityLaw",
    "SteinProfile",
    "stein_profile",
    "convolved_density",
    "density_law",
    "convolved_stein_constant",
    "stein_constant",
    "triangular",
    "symmetric_beta",
]


@dataclass(frozen=True)
class DensityLaw:
    """Zero-mean law with density ``pdf`` supported in ``[-b, b]`` (``b`` may be inf).

    ``breakpoints`` lists interior points where ``pdf`` is not smooth; they
    are handed to the quadrature routine.
    """

    pdf: Callable[[float], float]
    b: float
    breakpoints: tuple = ()
    name: str = "density"

    def __post_init__(self):
        if not self.b > 0:
            raise ConfigurationError("support half-width b must be positive")


def triangular(b: float = 1.0) -> DensityLaw:
    return DensityLaw(lambda x: max(0.0, (b - abs(x)) / (b * b)), b, (0.0,), "triangular")


def symmetric_beta(alpha: float, b: float = 1.0) -> DensityLaw:
    """Beta(alpha, alpha) rescaled to ``[-b, b]``; unimodal for ``alpha >= 1``."""
    dist = stats.beta(alpha, alpha, loc=-b, scale=2 * b)
    return DensityLaw(lambda x: float(dist.pdf(x)), b, (), f"beta({alpha:g})")


@dataclass(frozen=True)
class SteinProfile:
    dist: object
    m: Callable[[float], float]
    g: Callable[[float], float]
    grid: np.ndarray
    m_values: np.ndarray
    g_values: np.ndarray
    G: float


def _density_profile(law: DensityLaw):
    pts = sorted(set(p for p in law.breakpoints if -law.b < p < law.b))

    def m(x: float) -> float:
        if x <= -law.b or x >= law.b:
            return 0.0
        inner = [p for p in pts if -law.b < p < x]
        val, _ = integrate.quad(
            lambda t: t * law.pdf(t), -law.b, x, points=inner or None, epsabs=1e-10, epsrel=1e-10, limit=200
        )
        return -val

    def g(x: float) -> float:
        p = law.pdf(x)
        return m(x) / p if p > 0 else 0.0

    return m, g


def _analytic_profile(dist):
    if isinstance(dist, Gaussian):
        s2 = dist.sigma**2
        pdf = stats.norm(scale=dist.sigma).pdf
        return (lambda x: s2 * float(pdf(x))), (lambda x: s2)
    b = dist.b

    def m(x: float) -> float:
        return (b * b - x * x) / (4 * b) if abs(x) < b else 0.0

    def g(x: float) -> float:
        return (b * b - x * x) / 2 if abs(x) < b else 0.0

    return m, g


def density_law(dist) -> DensityLaw:
    """Gaussian or uniform noise as a plain density, for numerical profiles."""
    if isinstance(dist, Gaussian):
        pdf = stats.norm(scale=dist.sigma).pdf
        return DensityLaw(lambda x: float(pdf(x)), float("inf"), (), "gaussian")
    if isinstance(dist, Uniform):
        b = dist.b
        return DensityLaw(lambda x: 1.0 / (2 * b) if abs(x) <= b else 0.0, b, (), "uniform")
    raise UnsupportedNoiseError(f"no density for {type(dist).__name__}")


def stein_profile(dist, grid: Sequence[float]) -> SteinProfile:
    """Evaluate ``m`` and ``g`` on ``grid``; ``G`` is the largest ``g`` seen.

    Gaussian and uniform laws use closed forms, a ``DensityLaw`` is
    integrated numerically.  Discrete laws raise ``UnsupportedNoiseError``.
    """
    if isinstance(dist, (Rademacher, DiscreteBounded)) or getattr(dist, "is_discrete", False):
        raise UnsupportedNoiseError(
            f"{type(dist).__name__} is discrete: m(x) dx cannot have a density with respect to it"
        )
    if isinstance(dist, (Gaussian, Uniform)):
        m, g = _analytic_profile(dist)
    elif isinstance(dist, DensityLaw):
        m, g = _density_profile(dist)
    else:
        raise UnsupportedNoiseError(f"no Stein profile for {type(dist).__name__}")
    xs = np.asarray(grid, dtype=float)
    mv = np.array([m(x) for x in xs])
    gv = np.array([g(x) for x in xs])
    return SteinProfile(dist, m, g, xs, mv, gv, float(gv.max()))


def stein_constant(dist) -> float:
    """Closed-form sup of ``g`` for the laws where one is known."""
    if isinstance(dist, Gaussian):
        return dist.sigma**2
    if isinstance(dist, Uniform):
        return dist.b**2 / 2
    if isinstance(dist, (Rademacher, DiscreteBounded)) or getattr(dist, "is_discrete", False):
        raise UnsupportedNoiseError(f"{type(dist).__name__} is discrete and has no Stein constant")
    raise UnsupportedNoiseError(f"no closed-form Stein constant for {type(dist).__name__}")


def convolved_density(base, B_xi: float) -> DensityLaw:
    """Law of ``xi + zeta`` with ``zeta`` uniform on ``[-B_xi, B_xi]``.

    The density is ``P(|xi - x| <= B_xi) / (2 B_xi)``.  For atoms sitting
    exactly on the window edge half the mass is counted, which only changes
    the density on a null set.
    """
    if not B_xi > 0:
        raise ConfigurationError("B_xi must be positive")
    if isinstance(base, Rademacher):
        atoms, probs = np.array([-base.a, base.a]), np.array([0.5, 0.5])
    elif isinstance(base, DiscreteBounded):
        atoms, probs = np.asarray(base.support), np.asarray(base.probs)
    elif isinstance(base, Uniform):
        c = base.b

        def pdf_u(x: float) -> float:
            overlap = max(0.0, min(x + B_xi, c) - max(x - B_xi, -c))
            return overlap / (2 * c) / (2 * B_xi)

        brk = tuple(sorted({-c - B_xi, -c + B_xi, c - B_xi, c + B_xi}))
        return DensityLaw(pdf_u, c + B_xi, brk, "uniform*uniform")
    else:
        raise UnsupportedNoiseError(f"cannot convolve {type(base).__name__}")
    if np.max(np.abs(atoms)) > B_xi * (1 + 1e-12):
        raise ConfigurationError("base noise exceeds the perturbation bound B_xi")

    def pdf(x: float) -> float:
        d = np.abs(atoms - x)
        inside = np.where(np.isclose(d, B_xi, rtol=0, atol=1e-14), 0.5, (d < B_xi).astype(float))
        return float(np.dot(probs, inside) / (2 * B_xi))

    brk = tuple(sorted(set(np.concatenate([atoms - B_xi, atoms + B_xi]).tolist())))
    return DensityLaw(pdf, 2 * B_xi, brk, "discrete*uniform")


def convolved_stein_constant(B_xi: float) -> float:
    """Stein constant of bounded noise plus uniform ``[-B_xi, B_xi]`` noise: ``2 B_xi^2``."""
    if not B_xi > 0:
        raise ConfigurationError("B_xi must be positive")
    return 2.0 * B_xi * B_xi


def second_moment_from_profile(law: DensityLaw) -> float:
    """``int m(x) dx``, which equals ``E[xi^2]`` for a zero-mean law."""
    m, _ = _density_profile(law)
    pts = [p for p in law.breakpoints if -law.b < p < law.b]
    val, _ = integrate.quad(m, -law.b, law.b, points=pts or None, epsabs=1e-10, limit=200)
    return val


def variance_of(law: DensityLaw) -> float:
    pts = [p for p in law.breakpoints if -law.b < p < law.b]
    val, _ = integrate.quad(lambda t: t * t * law.pdf(t), -law.b, law.b, points=pts or None, epsabs=1e-12, limit=200)
    return val

