"""Numpy implementation of the bitset kernels.

Position ``i`` of a sequence lives in word ``i // 64``, bit ``i % 64``.  A
row of ``W`` words therefore holds one sequence; the index stacks one row
per sequence and one such block per symbol.
"""

from __future__ import annotations

import numpy as np

WORD_BITS = 64
_ONE = np.uint64(1)
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


def shift_up(bits: np.ndarray, k: int) -> np.ndarray:
    """Move every set position ``k`` places towards the end of its row."""
    width = bits.shape[-1]
    q, r = divmod(k, WORD_BITS)
    out = np.zeros_like(bits)
    if q >= width:
        return out
    src = bits[..., : width - q]
    if r == 0:
        out[..., q:] = src
    else:
        out[..., q:] = src << np.uint64(r)
        out[..., q + 1 :] |= src[..., : width - q - 1] >> np.uint64(WORD_BITS - r)
    return out


def dilate(prefix_ends: np.ndarray, max_gap: int) -> np.ndarray:
    """Positions reachable from some set position by a forward step in ``[1, max_gap]``.

    ``max_gap <= 0`` means unbounded: everything strictly after the first
    set position of the row.
    """
    if max_gap <= 0 or max_gap >= prefix_ends.shape[-1] * WORD_BITS:
        nonzero = prefix_ends != 0
        seen_before = (np.cumsum(nonzero, axis=-1) - nonzero) > 0
        low = prefix_ends & (~prefix_ends + _ONE)
        above_low = ~(low | (low - _ONE))
        return np.where(seen_before, _ALL, above_low)
    reach = shift_up(prefix_ends, 1)
    span = 1
    while span < max_gap:
        step = min(span, max_gap - span)
        reach |= shift_up(reach, step)
        span += step
    return reach


def extend(
    prefix_ends: np.ndarray,
    index: np.ndarray,
    candidates: np.ndarray,
    max_gap: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Score every candidate one-symbol extension of a prefix.

    Returns ``(ends, supports)`` where ``ends[c]`` is the end-position bitset
    of ``prefix + candidates[c]`` and ``supports[c]`` its sequence count.
    """
    reach = dilate(prefix_ends, max_gap)
    ends = index[candidates] & reach[None, :, :]
    supports = np.count_nonzero(ends.any(axis=2), axis=1).astype(np.int64)
    return ends, supports
