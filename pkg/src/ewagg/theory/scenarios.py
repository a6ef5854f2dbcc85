"""Scenario files for the certification harness and the built-in library.

A scenario file is a flat key=value text file.  Recognized keys::

    name, theorem           label and default theorem (t1..t4, t5, mcewa, skorokhod, stein)
    K, n, seed              dimensions and generator seed
    fstar                   zero | gaussian | rank1      (fstar_scale)
    candidates              dictionary size J            (cand_scale, cand_rank, fstar_in_dict)
    noise                   gaussian | uniform | rademacher | discrete | shared | correlated
    scale                   sigma, b or a of the noise law
    base, base_scale        inner law for shared / correlated noise
    rho                     equicorrelation of the covariance for correlated noise
    support, probs          comma lists for discrete noise
    tau                     "threshold" or a number      (tau_factor)
    B_xi, L                 optional overrides of the derived constants
    trials                  default number of Monte-Carlo trials

Candidates are ``F* + cand_scale * R_j`` with ``R_j`` a random rank
``cand_rank`` matrix with unit-variance entries; with ``fstar_in_dict`` the
first candidate is ``F*`` itself.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from ..config import FlatConfig, load_config, parse_config
from ..core import Correlated, DiscreteBounded, Gaussian, Rademacher, SharedMagnitudeSymmetric, Uniform
from ..errors import ConfigurationError
from ..sampler import DiscreteDictionary
from .bounds import Scenario


def _simple_noise(kind: str, scale: float, cfg: FlatConfig):
    if kind == "gaussian":
        return Gaussian(scale)
    if kind == "uniform":
        return Uniform(scale)
    if kind == "rademacher":
        return Rademacher(scale)
    if kind == "discrete":
        support = cfg.get_floats("support")
        probs = cfg.get_floats("probs")
        if support is None or probs is None:
            raise ConfigurationError("discrete noise needs support and probs")
        return DiscreteBounded(tuple(s * scale for s in support), tuple(probs))
    raise ConfigurationError(f"unknown noise kind {kind!r}")


def build_noise(cfg: FlatConfig, K: int):
    kind = cfg.get("noise", "gaussian").lower()
    scale = cfg.get_float("scale", 1.0)
    if kind == "shared":
        base = _simple_noise(cfg.get("base", "uniform").lower(), cfg.get_float("base_scale", scale), cfg)
        return SharedMagnitudeSymmetric(base)
    if kind == "correlated":
        base = _simple_noise(cfg.get("base", "gaussian").lower(), cfg.get_float("base_scale", scale), cfg)
        rho = cfg.get_float("rho", 0.0)
        if not 0.0 <= rho <= 1.0:
            raise ConfigurationError("rho must lie in [0, 1]")
        cov = (1 - rho) * np.eye(K) + rho * np.ones((K, K))
        return Correlated(cov, base)
    return _simple_noise(kind, scale, cfg)


def _random_rank(rng, K, n, r):
    r = max(1, min(r, K, n))
    A = rng.standard_normal((K, r))
    B = rng.standard_normal((r, n))
    return A @ B / np.sqrt(r)


def build_scenario(cfg: FlatConfig) -> Scenario:
    K = cfg.get_int("k", 4)
    n = cfg.get_int("n", 12)
    rng = np.random.default_rng(cfg.get_int("seed", 0))

    fstar_kind = cfg.get("fstar", "gaussian").lower()
    fscale = cfg.get_float("fstar_scale", 1.0)
    if fstar_kind == "zero":
        F_star = np.zeros((K, n))
    elif fstar_kind == "gaussian":
        F_star = fscale * rng.standard_normal((K, n))
    elif fstar_kind == "rank1":
        u = rng.standard_normal(K)
        v = rng.standard_normal(n)
        F_star = fscale * np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v)) * np.sqrt(K * n)
    else:
        raise ConfigurationError(f"unknown fstar kind {fstar_kind!r}")

    J = cfg.get_int("candidates", 8)
    cscale = cfg.get_float("cand_scale", 0.5)
    crank = cfg.get_int("cand_rank", min(K, n))
    cands = np.stack([F_star + cscale * _random_rank(rng, K, n, crank) for _ in range(J)])
    if cfg.get_bool("fstar_in_dict", False):
        cands[0] = F_star
    dictionary = DiscreteDictionary(cands)

    tau_raw = cfg.get("tau", "threshold").lower()
    tau = None if tau_raw == "threshold" else float(tau_raw)
    return Scenario(
        name=cfg.get("name", "scenario"),
        dictionary=dictionary,
        F_star=F_star,
        noise=build_noise(cfg, K),
        tau=tau,
        B_xi=cfg.get_float("b_xi"),
        L=cfg.get_float("l"),
        tau_factor=cfg.get_float("tau_factor", 1.0),
    )


def load_scenario(path) -> tuple[Scenario, FlatConfig]:
    cfg = load_config(path)
    return build_scenario(cfg), cfg


def library() -> dict[str, FlatConfig]:
    """Built-in scenario configurations, keyed by file stem."""
    out = {}
    root = resources.files("ewagg") / "scenarios"
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".cfg"):
            out[entry.name[:-4]] = parse_config(entry.read_text())
    return out


def library_path(stem: str):
    return resources.files("ewagg") / "scenarios" / f"{stem}.cfg"
