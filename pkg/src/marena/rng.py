"""Deterministic 64-bit PRNG (splitmix64).

The whole engine draws randomness through this module so that state fits in
a single integer, copies are free and streams are reproducible across runs.
Cross-implementation bit equality is not a goal; cross-run equality is.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix(x: int) -> int:
    """One splitmix64 output for state ``x`` (stateless finalizer)."""
    z = (x + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def next_state(state: int) -> tuple[int, int]:
    """Advance the stream: returns (new_state, draw)."""
    new = (state + _GAMMA) & _MASK
    return new, mix(state)


def u01(x: int) -> float:
    """Map a 64-bit draw to [0, 1) using the top 53 bits."""
    return (x >> 11) * (1.0 / (1 << 53))


class Stream:
    """A tiny stateful wrapper around the splitmix64 sequence."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state, draw = next_state(self.state)
        return draw

    def next_u01(self) -> float:
        return u01(self.next_u64())

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo bias is negligible for n << 2^64."""
        return self.next_u64() % n
