"""Counter-based deterministic random number stream.

Every stochastic component of the toolkit (stochastic synapses, rate
encoding, weight init, oversampling, splits) draws from an
:class:`RngStream`. The generator is a keyed splitmix64 evaluated at a
running counter, so draw *i* of a stream is a pure function of
``(seed, i)``. That buys three things at once:

* identical sequences on every platform (64-bit integer ops only),
* cheap derived streams that never collide with the parent,
* compiled and pure-Python simulation kernels that can consume the very
  same draws in the very same order.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0xD1B54A32D192ED03)
_U53_INV = float(2.0**-53)


def _mix64(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """splitmix64 finalizer; wraps modulo 2**64 (numpy uint64 semantics)."""
    with np.errstate(over="ignore"):
        z = x
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


class RngStream:
    """Deterministic stream of uniform draws keyed by a 64-bit seed.

    Same seed, same platform or not: identical sequence. The internal
    counter advances by the number of values drawn; ``reserve`` hands a
    (key, offset) window to simulation kernels that generate the same
    draws inline.
    """

    __slots__ = ("seed", "_key", "_counter")

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._key = _mix64(np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF) ^ _STREAM_SALT)
        self._counter = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, counter={self._counter})"

    @property
    def counter(self) -> int:
        return self._counter

    def reserve(self, count: int) -> tuple[int, int]:
        """Claim `count` draws; returns (key, first_counter) for kernels."""
        if count < 0:
            raise ValueError("reserve count must be non-negative")
        start = self._counter
        self._counter += count
        return int(self._key), start

    def uniforms(self, count: int) -> np.ndarray:
        """`count` doubles uniform on [0, 1)."""
        key, start = self.reserve(count)
        return uniforms_at(key, start, count)

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def bernoulli(self, p: float, count: int) -> np.ndarray:
        """`count` draws in {0,1} with P(1) = p. p=0 and p=1 are exact."""
        return (self.uniforms(count) < p).astype(np.uint8)

    def integers(self, low: int, high: int, count: int) -> np.ndarray:
        """`count` ints uniform on [low, high). Scaled-uniform construction."""
        if high <= low:
            raise ValueError("integers requires high > low")
        u = self.uniforms(count)
        return (low + np.floor(u * (high - low))).astype(np.int64)

    def integer(self, low: int, high: int) -> int:
        return int(self.integers(low, high, 1)[0])

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) (sort keys are draws)."""
        return np.argsort(self.uniforms(n), kind="stable")

    def shuffled(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[self.permutation(len(values))]

    def substream(self, tag: int) -> "RngStream":
        """Independent child stream; children with distinct tags never share draws."""
        child = RngStream(0)
        child.seed = self.seed
        with np.errstate(over="ignore"):
            salted = self._key + _GOLDEN * np.uint64((int(tag) + 1) & 0xFFFFFFFFFFFFFFFF)
        child._key = _mix64(salted)
        child._counter = 0
        return child


def uniforms_at(key: int, start: int, count: int) -> np.ndarray:
    """Vectorized draws `start .. start+count-1` of the stream with this key.

    Must stay bit-identical to the scalar generator in the compiled
    kernels: u_i = (mix64(key + (i+1)*GOLDEN) >> 11) * 2^-53.
    """
    with np.errstate(over="ignore"):
        idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        base = np.uint64(key) + _GOLDEN * idx
    bits = _mix64(base)
    return (bits >> np.uint64(11)).astype(np.float64) * _U53_INV


def uniform_at(key: int, index: int) -> float:
    """Scalar counterpart of :func:`uniforms_at` (draw number `index`)."""
    with np.errstate(over="ignore"):
        base = np.uint64(key) + _GOLDEN * np.uint64(index + 1)
    bits = _mix64(base)
    return float(bits >> np.uint64(11)) * _U53_INV
