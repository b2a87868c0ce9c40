"""Lempel-Ziv (1976) sequence complexity.

The raw measure counts the phrases of the exhaustive-history sequential
parse: each phrase is the shortest extension of the remaining sequence
that has not yet occurred as a substring of everything before its last
symbol, and a final incomplete phrase still counts. The normalized
measure is (C/n) * log_alpha(n); it tends to 1 for random binary
sequences and to 0 for eventually periodic ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractError


@dataclass(frozen=True)
class LzcResult:
    raw_count: int
    normalized: float
    sequence_length: int
    alphabet: int = 2


def _as_binary(seq) -> np.ndarray:
    arr = np.asarray(seq)
    if arr.dtype.kind in ("U", "S"):
        if arr.ndim == 0:
            arr = np.frombuffer(str(arr).encode("ascii"), dtype=np.uint8) - ord("0")
        else:
            raise ContractError("pass a single string or a 1-D 0/1 array")
    arr = np.ascontiguousarray(arr)
    if arr.ndim != 1 or arr.size == 0:
        raise ContractError("sequence must be non-empty and 1-D")
    if not np.isin(arr, (0, 1)).all():
        raise ContractError("sequence must be binary")
    return arr.astype(np.uint8)


def lz76_complexity(seq) -> int:
    """Phrase count C of the sequential exhaustive-history parse."""
    return int(kernels.lz76_count(_as_binary(seq)))


def normalized_lzc(seq) -> float:
    """c = (C/n) * log2(n) for binary sequences."""
    bits = _as_binary(seq)
    n = bits.size
    if n < 2:
        raise ContractError("normalized complexity needs length >= 2")
    c = int(kernels.lz76_count(bits))
    return (c / n) * math.log2(n)


def analyze(seq) -> LzcResult:
    """Raw and normalized complexity in one pass."""
    bits = _as_binary(seq)
    n = bits.size
    if n < 2:
        raise ContractError("normalized complexity needs length >= 2")
    c = int(kernels.lz76_count(bits))
    return LzcResult(raw_count=c, normalized=(c / n) * math.log2(n), sequence_length=n)
