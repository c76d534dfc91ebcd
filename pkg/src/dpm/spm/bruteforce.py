"""Exhaustive reference miner for small databases."""

from __future__ import annotations

from collections import defaultdict
from itertools import combinations

from .database import MiningParams, Pattern, PatternSet, SequenceDatabase


def _subsequences(seq: tuple[int, ...], max_gap: int | None, max_len: int) -> set[tuple[int, ...]]:
    """Every symbol tuple realised by some gap-respecting position tuple."""
    out: set[tuple[int, ...]] = set()
    n = len(seq)
    for k in range(1, min(n, max_len) + 1):
        for positions in combinations(range(n), k):
            if max_gap is not None and any(b - a > max_gap for a, b in zip(positions, positions[1:])):
                continue
            out.add(tuple(seq[p] for p in positions))
    return out


def mine_bruteforce(db: SequenceDatabase, params: MiningParams = MiningParams()) -> PatternSet:
    """Enumerate all occurrences outright and count supporting sequences.

    Only symbol lists that occur somewhere can reach a support of at least
    one, so enumerating position tuples covers every candidate that could
    pass the threshold.  Intended for alphabets <= 8 and lengths <= 12.
    """
    threshold = params.absolute_threshold(len(db))
    longest = max(len(s) for s in db.sequences)
    max_len = longest if params.max_len is None else min(params.max_len, longest)

    holders: dict[tuple[int, ...], list[str]] = defaultdict(list)
    for sid, seq in zip(db.session_ids, db.sequences):
        for sub in _subsequences(seq, params.max_gap, max_len):
            holders[sub].append(sid)

    patterns = [
        Pattern(symbols, len(ids), tuple(sorted(ids)))
        for symbols, ids in holders.items()
        if len(ids) >= threshold and params.min_len <= len(symbols)
    ]
    return PatternSet(db.alphabet, len(db), params, patterns)
