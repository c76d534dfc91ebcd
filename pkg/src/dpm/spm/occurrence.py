"""Direct-scan occurrence checks.

These walk the raw integer sequences position by position and share
nothing with the bitset kernels, so they double as a cross-check for the
miner.
"""

from __future__ import annotations

from typing import Sequence

from .database import MiningError, SequenceDatabase


def occurrence_ends(seq: Sequence, pattern: Sequence, max_gap: int | None) -> set[int]:
    """Positions at which some gap-constrained occurrence of ``pattern`` ends."""
    if not pattern:
        raise MiningError("pattern must be nonempty")
    ends = {i for i, s in enumerate(seq) if s == pattern[0]}
    for sym in pattern[1:]:
        if not ends:
            return ends
        nxt = set()
        for j, s in enumerate(seq):
            if s != sym:
                continue
            for e in ends:
                if 0 < j - e and (max_gap is None or j - e <= max_gap):
                    nxt.add(j)
                    break
        ends = nxt
    return ends


def contains(seq: Sequence, pattern: Sequence, max_gap: int | None) -> bool:
    return bool(occurrence_ends(seq, pattern, max_gap))


def occurrence_starts(seq: Sequence, pattern: Sequence, max_gap: int | None) -> int:
    """Number of start positions from which an occurrence of ``pattern`` exists."""
    return sum(
        1 for start, s in enumerate(seq) if s == pattern[0] and _starts_at(seq, start, pattern, max_gap)
    )


def _starts_at(seq: Sequence, start: int, pattern: Sequence, max_gap: int | None) -> bool:
    frontier = {start}
    for sym in pattern[1:]:
        frontier = {
            j
            for e in frontier
            for j in range(e + 1, len(seq) if max_gap is None else min(len(seq), e + max_gap + 1))
            if seq[j] == sym
        }
        if not frontier:
            return False
    return True


def support_count(
    db: SequenceDatabase, pattern: Sequence[int], max_gap: int | None
) -> tuple[int, tuple[str, ...]]:
    """Count sequences holding at least one occurrence of ``pattern``.

    Returns ``(count, sorted supporting session ids)``.
    """
    if not pattern:
        raise MiningError("pattern must be nonempty")
    for sym in pattern:
        if not 0 <= sym < len(db.alphabet):
            raise MiningError(f"unknown symbol id {sym}")
    ids = sorted(
        sid for sid, seq in zip(db.session_ids, db.sequences) if contains(seq, pattern, max_gap)
    )
    return len(ids), tuple(ids)
