"""Portable deterministic RNG used by every sampling step in the toolkit.

The generator is SplitMix64 (public-domain algorithm): a 64-bit counter
advanced by the golden-gamma constant and passed through a mixing
finalizer. It was chosen because it is trivial to reimplement bit-exactly
in any language, which keeps seeded runs replayable outside this package.
``tests/data/rng_vectors.json`` pins the output stream for a set of seeds;
the vectors were produced with an independently compiled C transcription
of the reference implementation.

Derived draws are defined on top of the raw 64-bit stream so they are
portable too:

* ``random()``   — take the top 53 bits, scale by 2**-53.
* ``randbelow(n)`` — rejection sampling: draw u64 until it falls below the
  largest multiple of ``n``, then reduce mod ``n``. Always consumes at
  least one draw, even for n == 1.
* ``split(seed, i)`` — counter-based stream splitting: the i-th output of
  a SplitMix64 seeded with ``seed``, computed in O(1).
"""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def split(seed: int, index: int) -> int:
    """Child seed for stream ``index`` of ``seed`` (counter-based, O(1))."""
    if index < 0:
        raise ValueError("stream index must be >= 0")
    return _mix((seed + _GOLDEN * (index + 1)) & _MASK64)


class SplitMix64:
    """Seeded SplitMix64 stream. State is the 64-bit counter."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via unbiased rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow() requires n >= 1")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise ValueError("choice() on empty sequence")
        return seq[self.randbelow(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by randbelow()."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def categorical(self, weights: Sequence[float]) -> int:
        """Index drawn proportionally to non-negative weights (one draw)."""
        total = float(sum(weights))
        if total <= 0.0 or any(w < 0 for w in weights):
            raise ValueError("categorical() needs non-negative weights with positive sum")
        u = self.random() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                return i
        # Guard against accumulated float error: last positive-weight bucket.
        for i in range(len(weights) - 1, -1, -1):
            if weights[i] > 0:
                return i
        raise AssertionError("unreachable")
