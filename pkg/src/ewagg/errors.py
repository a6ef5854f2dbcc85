"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class EwaError(Exception):
    """Base class for all package errors."""


class ArgumentError(EwaError, ValueError):
    """An input value is not acceptable (empty, non-finite, asymmetric)."""


class DimensionError(EwaError, ValueError):
    """Matrix shapes are inconsistent."""


class ConfigurationError(EwaError, ValueError):
    """A model, prior or experiment parameter is invalid."""


class UnsupportedNoiseError(ConfigurationError):
    """The requested computation is not defined for this noise law."""


class DivergenceError(EwaError, RuntimeError):
    """A Langevin iterate became non-finite."""

    def __init__(self, step: int, chain: int | None = None):
        self.step = step
        self.chain = chain
        where = f"step {step}" if chain is None else f"chain {chain}, step {step}"
        super().__init__(
            f"Langevin iterate is not finite at {where}; reduce the step size h"
        )
