"""Oracle-inequality right-hand sides and their Monte-Carlo certification."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from ..core import (
    Correlated,
    DiscreteBounded,
    Rademacher,
    SharedMagnitudeSymmetric,
    Uniform,
    as_label_matrix,
    empirical_loss,
    sample_noise,
)
from ..errors import ConfigurationError, DimensionError
from ..prior import PriorConfig, kl_shift_bound
from ..sampler import (
    DiscreteDictionary,
    LmcConfig,
    PosteriorConfig,
    discrete_ewa,
    gibbs_weights,
    newa,
)
from .stein import stein_constant

THEOREMS = ("t1", "t2", "t3", "t4")
REPORT_FIELDS = ("scenario", "trials", "empirical_risk", "std_error", "bound_rhs", "slack", "passed")


@dataclass(frozen=True)
class RiskReport:
    empirical_risk: float
    std_error: float
    bound_rhs: float
    trials: int
    scenario: str = ""
    slack: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "slack", self.bound_rhs - self.empirical_risk)
        object.__setattr__(self, "passed", bool(self.empirical_risk <= self.bound_rhs + 3.0 * self.std_error))

    def row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in REPORT_FIELDS}

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict} {self.scenario or '-'}: risk {self.empirical_risk:.6g} +/- {self.std_error:.2g}"
            f" <= bound {self.bound_rhs:.6g} (slack {self.slack:.4g}, {self.trials} trials)"
        )


def reports_to_csv(reports, fh=None) -> str:
    buf = fh if fh is not None else io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_FIELDS)
    writer.writeheader()
    for r in reports:
        writer.writerow(r.row())
    return buf.getvalue() if fh is None else ""


# --------------------------------------------------------------------------
# right-hand sides


def oracle_rhs_discrete(dictionary: DiscreteDictionary, F_star, tau: float) -> float:
    """Exact ``inf_p { E_p loss(F, F*) + 2 tau KL(p || prior) }`` on the dictionary.

    The infimum is attained by Gibbs weights and equals
    ``-2 tau log sum_j prior_j exp(-loss_j / (2 tau))``.
    """
    if not tau > 0:
        raise ConfigurationError("tau must be positive")
    F_star = as_label_matrix(F_star, "F_star")
    if F_star.shape != dictionary.shape:
        raise DimensionError("F_star and dictionary shapes differ")
    losses = dictionary.losses(F_star)
    return float(-2.0 * tau * logsumexp(np.log(dictionary.weights) - losses / (2.0 * tau))) + 0.0


def point_mass_rhs(dictionary: DiscreteDictionary, F_star, tau: float) -> float:
    """``min_j { loss_j + 2 tau log(1 / prior_j) }``: the bound restricted to Dirac masses."""
    losses = dictionary.losses(as_label_matrix(F_star, "F_star"))
    return float(np.min(losses - 2.0 * tau * np.log(dictionary.weights)))


def theorem5_rhs(F_bar, F_star, lam: float, tau: float) -> float:
    """``loss(F_bar, F*) + 2 tau * KL-shift bound(F_bar) + K lam^2``."""
    F_bar = as_label_matrix(F_bar, "F_bar")
    F_star = as_label_matrix(F_star, "F_star")
    if F_bar.shape != F_star.shape:
        raise DimensionError("F_bar and F_star shapes differ")
    if not (lam > 0 and tau > 0):
        raise ConfigurationError("lambda and tau must be positive")
    K, n = F_star.shape
    kl = kl_shift_bound(F_bar, PriorConfig(lam, K, n))
    return empirical_loss(F_bar, F_star) + 2.0 * tau * kl + K * lam * lam


# --------------------------------------------------------------------------
# scenarios and temperature thresholds


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to certify one inequality on a finite dictionary.

    ``tau=None`` means "use the smallest temperature the theorem allows",
    times ``tau_factor``.
    ``B_xi`` and ``L`` default to values derived from the noise law and the
    dictionary.
    """

    name: str
    dictionary: DiscreteDictionary
    F_star: np.ndarray
    noise: object
    tau: float | None = None
    B_xi: float | None = None
    L: float | None = None
    tau_factor: float = 1.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.dictionary.shape


def _dictionary_diameter(dictionary: DiscreteDictionary, transform=None, norm=2) -> float:
    c = dictionary.candidates
    if transform is not None:
        c = np.einsum("ab,jbn->jan", transform, c)
    best = 0.0
    for a in range(len(c)):
        d = c[a + 1:] - c[a]
        if d.size == 0:
            continue
        if norm == 2:
            best = max(best, float(np.sqrt(np.max(np.sum(d * d, axis=1)))))
        else:
            best = max(best, float(np.max(np.abs(d))))
    return best


def _split_correlated(noise):
    if isinstance(noise, Correlated):
        return noise.base, noise.root, noise.spectral_norm
    return noise, None, 1.0


def temperature_threshold(which: str, sc: Scenario) -> float:
    """Smallest temperature for which theorem ``which`` applies to ``sc``."""
    K, n = sc.shape
    noise = sc.noise
    if which == "t1":
        B = sc.B_xi if sc.B_xi is not None else noise.entry_bound
        if not math.isfinite(B):
            raise ConfigurationError("t1 needs bounded noise (finite B_xi)")
        L = sc.L if sc.L is not None else _dictionary_diameter(sc.dictionary) / math.sqrt(K)
        return (K / n) * B * max(2 * L, 3 * B)
    if which == "t2":
        base, root, snorm = _split_correlated(noise)
        if isinstance(base, SharedMagnitudeSymmetric) or isinstance(base, Correlated):
            raise ConfigurationError("t2 needs a base noise with independent rows")
        B = sc.B_xi if sc.B_xi is not None else base.entry_bound
        if not math.isfinite(B):
            raise ConfigurationError("t2 needs bounded base noise")
        L = sc.L if sc.L is not None else _dictionary_diameter(sc.dictionary, root, norm=math.inf)
        return (1.0 / n) * B * max(2 * L, 3 * snorm * B)
    if which == "t3":
        base, _, snorm = _split_correlated(noise)
        G = stein_constant(base)
        return snorm * G / n
    if which == "t4":
        if isinstance(noise, (Correlated, SharedMagnitudeSymmetric)) or not isinstance(
            noise, (Rademacher, Uniform, DiscreteBounded)
        ):
            raise ConfigurationError("t4 needs iid bounded entries")
        B = sc.B_xi if sc.B_xi is not None else noise.entry_bound
        if noise.entry_bound > B * (1 + 1e-12):
            raise ConfigurationError("noise entries exceed B_xi")
        return 2.0 * B * B / n
    raise ConfigurationError(f"unknown theorem {which!r}; expected one of {THEOREMS}")


def _resolve_tau(which: str, sc: Scenario) -> tuple[float, float]:
    tmin = temperature_threshold(which, sc)
    tau = tmin * sc.tau_factor if sc.tau is None else float(sc.tau)
    if tau < tmin * (1 - 1e-12):
        raise ConfigurationError(f"{which}: tau = {tau:g} is below the admissible threshold {tmin:g}")
    return tau, tmin


def verify_theorem(which: str, sc: Scenario, trials: int, rng: np.random.Generator) -> RiskReport:
    """Monte-Carlo risk of the exact discrete EWA against the oracle bound.

    For ``t4`` every trial also adds an independent uniform perturbation in
    ``[-B_xi, B_xi]`` to the labels before aggregating.
    """
    which = which.lower()
    tau, _ = _resolve_tau(which, sc)
    if trials < 2:
        raise ConfigurationError("at least two trials are needed for a standard error")
    K, n = sc.shape
    F_star = np.asarray(sc.F_star, dtype=float)
    B = sc.B_xi if sc.B_xi is not None else sc.noise.entry_bound
    risks = np.empty(trials)
    for t in range(trials):
        Y = F_star + sample_noise(sc.noise, K, n, rng)
        if which == "t4":
            Y = Y + rng.uniform(-B, B, size=(K, n))
        risks[t] = empirical_loss(discrete_ewa(sc.dictionary, Y, tau), F_star)
    rhs = oracle_rhs_discrete(sc.dictionary, F_star, tau)
    return RiskReport(
        empirical_risk=float(risks.mean()),
        std_error=float(risks.std(ddof=1) / math.sqrt(trials)),
        bound_rhs=rhs,
        trials=trials,
        scenario=sc.name,
    )


# --------------------------------------------------------------------------
# Monte-Carlo EWA identity


@dataclass(frozen=True)
class McEwaReport:
    N: int
    trials: int
    lhs: float
    rhs: float
    gap: float
    gap_se: float
    excess: float
    excess_se: float

    @property
    def gap_z(self) -> float:
        return abs(self.gap) / self.gap_se if self.gap_se > 0 else (0.0 if self.gap == 0 else math.inf)


def mcewa_identity_check(
    dictionary: DiscreteDictionary, F_star, noise, tau: float, N: int, trials: int, rng: np.random.Generator
) -> McEwaReport:
    """Both sides of ``E loss(MC-EWA) = E loss(EWA) + (1/N) E Var_post``.

    Posterior draws are exact categorical samples from the Gibbs weights, so
    ``N`` draws reduce to a multinomial count vector.  ``excess`` estimates
    ``E loss(MC-EWA) - E loss(EWA)`` by ``E loss(MC-EWA, EWA)``, which has the
    same expectation without the zero-mean cross term.
    """
    if N < 1 or trials < 2:
        raise ConfigurationError("need N >= 1 and at least two trials")
    F_star = as_label_matrix(F_star, "F_star")
    K, n = F_star.shape
    cands = dictionary.candidates
    lhs = np.empty(trials)
    rhs = np.empty(trials)
    exc = np.empty(trials)
    for t in range(trials):
        Y = F_star + sample_noise(noise, K, n, rng)
        w = gibbs_weights(dictionary.losses(Y), dictionary.weights, tau)
        ewa = np.tensordot(w, cands, axes=1)
        spread = float(np.dot(w, np.einsum("jkn,jkn->j", cands - ewa, cands - ewa)) / n)
        counts = rng.multinomial(N, w / w.sum())
        mc = np.tensordot(counts / N, cands, axes=1)
        lhs[t] = empirical_loss(mc, F_star)
        rhs[t] = empirical_loss(ewa, F_star) + spread / N
        exc[t] = empirical_loss(mc, ewa)
    d = lhs - rhs
    root = math.sqrt(trials)
    return McEwaReport(
        N=N,
        trials=trials,
        lhs=float(lhs.mean()),
        rhs=float(rhs.mean()),
        gap=float(d.mean()),
        gap_se=float(d.std(ddof=1) / root),
        excess=float(exc.mean()),
        excess_se=float(exc.std(ddof=1) / root),
    )


# --------------------------------------------------------------------------
# low-rank prior bound via Langevin nEWA


def verify_theorem5(
    F_star,
    noise,
    B_xi: float,
    lam: float,
    tau: float,
    lmc: LmcConfig,
    trials: int,
    rng: np.random.Generator,
    candidates=None,
    name: str = "t5",
) -> RiskReport:
    """Risk of Langevin nEWA with the spectral Student prior against the low-rank bound.

    The bound is minimized over ``candidates`` (default: zero and ``F*``).
    Each trial draws fresh noise, a fresh perturbation and a fresh chain seed.
    """
    F_star = as_label_matrix(F_star, "F_star")
    K, n = F_star.shape
    if tau < 2 * B_xi * B_xi / n * (1 - 1e-12):
        raise ConfigurationError(f"t5: tau = {tau:g} is below the admissible threshold {2 * B_xi * B_xi / n:g}")
    if noise.entry_bound > B_xi * (1 + 1e-12):
        raise ConfigurationError("noise entries exceed B_xi")
    post = PosteriorConfig(tau, PriorConfig(lam, K, n))
    risks = np.empty(trials)
    for t in range(trials):
        Y = F_star + sample_noise(noise, K, n, rng)
        run = replace(lmc, seed=int(rng.integers(0, 2**63)))
        risks[t] = empirical_loss(newa(Y, B_xi, post, run, rng), F_star)
    cands = [np.zeros_like(F_star), F_star] if candidates is None else list(candidates)
    rhs = min(theorem5_rhs(c, F_star, lam, tau) for c in cands)
    se = float(risks.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return RiskReport(float(risks.mean()), se, rhs, trials, name)

