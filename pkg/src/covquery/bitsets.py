"""Dense bitset helpers: one bit per document, packed into uint64 words.

Bit ``d`` of a set lives in ``words[d >> 6]`` at position ``d & 63``
(little-endian bit order, matching ``np.packbits(..., bitorder="little")``).
All routines are pure numpy; popcounts use ``np.bitwise_count``.
"""

from __future__ import annotations

import numpy as np

WORD_BITS = 64


def n_words(n_bits: int) -> int:
    """Number of uint64 words needed to hold ``n_bits`` bits."""
    return (n_bits + WORD_BITS - 1) // WORD_BITS


def pack_bool(mask: np.ndarray) -> np.ndarray:
    """Pack a boolean vector (or matrix, last axis = documents) into uint64 words.

    Trailing pad bits are zero.
    """
    mask = np.asarray(mask, dtype=bool)
    nbits = mask.shape[-1]
    packed = np.packbits(mask, axis=-1, bitorder="little")
    pad = n_words(nbits) * 8 - packed.shape[-1]
    if pad:
        widths = [(0, 0)] * (packed.ndim - 1) + [(0, pad)]
        packed = np.pad(packed, widths)
    return packed.view(np.uint64)


def unpack_words(words: np.ndarray, n_bits: int) -> np.ndarray:
    """Inverse of :func:`pack_bool`: uint64 words back to a boolean vector/matrix."""
    as_bytes = np.ascontiguousarray(words).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[..., :n_bits].astype(bool)


def popcount(words: np.ndarray) -> int:
    """Total number of set bits."""
    return int(np.bitwise_count(words).sum())


def popcount_rows(words: np.ndarray) -> np.ndarray:
    """Per-row set-bit counts of a 2-D word matrix."""
    return np.bitwise_count(words).sum(axis=1, dtype=np.int64)


def union_words(words: np.ndarray, rows: np.ndarray | list[int]) -> np.ndarray:
    """OR-union of the selected rows of a word matrix (empty selection -> zeros)."""
    rows = np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        return np.zeros(words.shape[1], dtype=np.uint64)
    return np.bitwise_or.reduce(words[rows], axis=0)


def masked_popcount_rows(
    words: np.ndarray, mask: np.ndarray, chunk: int = 4096
) -> np.ndarray:
    """Per-row popcount of ``words[j] & mask``, chunked to bound temp memory."""
    out = np.empty(words.shape[0], dtype=np.int64)
    for lo in range(0, words.shape[0], chunk):
        hi = min(lo + chunk, words.shape[0])
        out[lo:hi] = np.bitwise_count(words[lo:hi] & mask).sum(axis=1, dtype=np.int64)
    return out
