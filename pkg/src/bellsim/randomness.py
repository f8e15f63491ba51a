"""Partially predictable bit sources and real-time parity extraction.

Each basis-choice bit is the XOR of a block of raw bits, every raw bit
carrying at most a configured excess predictability tau (an adversary's
advantage over 1/2). Under the worst-case model of independent, constantly
biased raw bits, the parity of k bits has excess predictability
2^(k-1) tau^k, which is the bound propagated to the hypothesis tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class RandomnessError(ValueError):
    """Invalid randomness model input."""


def output_predictability(tau_raw: float, k: int) -> float:
    """Excess predictability of the XOR of k raw bits with bias ``tau_raw``.

    2^(k-1) tau^k, clamped to [0, 0.5]; written as 0.5 (2 tau)^k so it never
    overflows. Monotone in tau and decreasing in k for tau < 0.5.
    """
    if not 0.0 <= tau_raw <= 0.5:
        raise RandomnessError("raw excess predictability must be in [0, 0.5]")
    if k < 1:
        raise RandomnessError("block length must be >= 1")
    return min(0.5, 0.5 * (2.0 * tau_raw) ** k)


@dataclass(frozen=True)
class RngModel:
    """Raw-bit bias, extraction block length, and the time reserved for it."""

    excess_predictability: float = 0.1
    raw_bits_per_output: int = 32
    extraction_time_ns: float = 160.0

    def __post_init__(self):
        if not 0.0 <= self.excess_predictability <= 0.5:
            raise RandomnessError("excess predictability must be in [0, 0.5]")
        if self.raw_bits_per_output < 1:
            raise RandomnessError("raw bits per output must be >= 1")
        if self.extraction_time_ns < 0:
            raise RandomnessError("extraction time must be non-negative")

    @property
    def tau_out(self) -> float:
        return output_predictability(self.excess_predictability, self.raw_bits_per_output)


def raw_bits(model: RngModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. raw bits with P(1) = 1/2 + tau (worst-case bias)."""
    if count < 0:
        raise RandomnessError("count must be non-negative")
    p_one = 0.5 + model.excess_predictability
    return (rng.random(count) < p_one).astype(np.uint8)


def xor_extract(model: RngModel, block: np.ndarray) -> int:
    """Parity of one raw-bit block of exactly the configured length."""
    block = np.asarray(block)
    if block.shape != (model.raw_bits_per_output,):
        raise RandomnessError(
            f"block length {block.shape} does not match k={model.raw_bits_per_output}"
        )
    return int(block.sum()) & 1


def setting_bits(model: RngModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` extracted basis-choice bits (one block of raw bits each)."""
    if count < 0:
        raise RandomnessError("count must be non-negative")
    k = model.raw_bits_per_output
    raw = raw_bits(model, count * k, rng).reshape(count, k)
    return (raw.sum(axis=1) & 1).astype(np.uint8)
