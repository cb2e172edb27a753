"""Seeded return streams.

Uniforms come from numpy's PCG64 bit generator, whose stream for a given
integer seed is fixed across platforms and numpy releases.  Each normal
variate consumes exactly two uniforms through the Box-Muller cosine branch::

    u1 = 1 - U1          (in (0, 1], so the log is finite)
    z  = sqrt(-2 ln u1) * cos(2 pi U2)

Ensemble members get child seeds from SplitMix64 applied to
``master + (index + 1) * 0x9E3779B97F4A7C15`` (mod 2**64).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

RNG_NAME = "PCG64/box-muller-cos"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class ReturnModel:
    """Distribution of the outside return ``R_t``.

    ``kind`` is ``"normal"`` (mean ``mu_r``, standard deviation ``sigma_r``)
    or ``"deterministic"`` (always ``mu_r``).
    """

    kind: str
    mu_r: float
    sigma_r: float = 0.0

    def __post_init__(self):
        if self.kind not in ("normal", "deterministic"):
            raise DomainError(f"unknown return model {self.kind!r}")
        if self.kind == "normal" and not self.sigma_r > 0:
            raise DomainError("normal return model needs sigma_r > 0")

    @classmethod
    def normal(cls, mu_r: float, sigma_r: float) -> "ReturnModel":
        return cls("normal", mu_r, sigma_r)

    @classmethod
    def deterministic(cls, mu_r: float) -> "ReturnModel":
        return cls("deterministic", mu_r, 0.0)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & _MASK64))


def split_seed(master: int, index: int) -> int:
    """SplitMix64 finalizer of ``master + (index + 1) * golden``."""
    z = (master + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def standard_normal(rng: np.random.Generator) -> float:
    u1 = 1.0 - rng.random()
    u2 = rng.random()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def draw_return(rng: np.random.Generator, model: ReturnModel) -> float:
    """One outside return.  Deterministic models do not touch the stream."""
    if model.kind == "deterministic":
        return model.mu_r
    return model.mu_r + model.sigma_r * standard_normal(rng)
