"""Depth-first vertical miner with co-occurrence pruning.

Each DFS node is a frequent pattern together with the bitset of positions
where one of its occurrences ends.  Under a gap constraint, ``p + x`` can
only end at an ``x`` position that lies within ``max_gap`` after one of
those ends, so one dilate-and-mask per candidate gives the child's end set.
Support is anti-monotone along prefixes, so infrequent children are cut.

The co-occurrence map records, for each symbol ``a``, which symbols ``b``
follow it within ``max_gap`` in enough sequences.  A candidate ``x`` whose
pair with the prefix's last symbol is infrequent cannot produce a frequent
child and is never scored.  Without a gap bound every prefix symbol must
precede ``x``, so all of their rows are intersected.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .database import MiningParams, MiningStats, Pattern, PatternSet, SequenceDatabase
from .kernels import get_backend


def cooccurrence_map(db: SequenceDatabase, max_gap: int | None, threshold: int) -> np.ndarray:
    """Boolean ``[a, b]`` matrix: ``b`` follows ``a`` within ``max_gap`` in >= threshold sequences."""
    n = len(db.alphabet)
    counts = np.zeros((n, n), dtype=np.int64)
    for seq in db.sequences:
        pairs = set()
        for i, a in enumerate(seq):
            stop = len(seq) if max_gap is None else min(len(seq), i + max_gap + 1)
            for j in range(i + 1, stop):
                pairs.add((a, seq[j]))
        for a, b in pairs:
            counts[a, b] += 1
    return counts >= threshold


def _supporting_ids(db: SequenceDatabase, ends: np.ndarray) -> tuple[str, ...]:
    rows = np.flatnonzero(ends.any(axis=1))
    return tuple(sorted(db.session_ids[r] for r in rows))


def _mine_subtree(
    db: SequenceDatabase,
    params: MiningParams,
    threshold: int,
    root: int,
    frequent: np.ndarray,
    cmap: np.ndarray | None,
    kernels,
) -> tuple[list[Pattern], MiningStats]:
    gap = 0 if params.max_gap is None else int(params.max_gap)
    stats = MiningStats()
    found: list[Pattern] = []
    index = db.bitsets
    root_ends = np.ascontiguousarray(index[root])
    allowed_root = cmap[root] if cmap is not None else None
    stack = [((root,), root_ends, allowed_root)]

    while stack:
        symbols, ends, allowed = stack.pop()
        stats.nodes += 1
        if len(symbols) >= params.min_len:
            found.append(Pattern(symbols, int(np.count_nonzero(ends.any(axis=1))), _supporting_ids(db, ends)))
        if params.max_len is not None and len(symbols) >= params.max_len:
            continue
        candidates = frequent if allowed is None else frequent[allowed[frequent]]
        if candidates.size == 0:
            continue
        stats.candidates_evaluated += int(candidates.size)
        child_ends, supports = kernels.extend(ends, index, candidates, gap)
        for k in np.flatnonzero(supports >= threshold)[::-1]:
            sym = int(candidates[k])
            if cmap is None:
                child_allowed = None
            elif params.max_gap is None:
                child_allowed = allowed & cmap[sym]
            else:
                child_allowed = cmap[sym]
            stack.append((symbols + (sym,), child_ends[k], child_allowed))
    return found, stats


def mine(
    db: SequenceDatabase,
    params: MiningParams = MiningParams(),
    *,
    prune: bool = True,
    backend: str | None = None,
    jobs: int = 1,
) -> PatternSet:
    """Mine every frequent gap-constrained pattern of ``db``.

    ``prune=False`` disables the co-occurrence map (the output is the same,
    only ``stats`` change).  ``jobs`` > 1 explores first-level subtrees on a
    thread pool; ``jobs=0`` uses one thread per CPU.
    """
    kernels = get_backend(backend)
    threshold = params.absolute_threshold(len(db))
    single = np.count_nonzero(db.bitsets.any(axis=2), axis=1)
    frequent = np.flatnonzero(single >= threshold).astype(np.int64)
    cmap = cooccurrence_map(db, params.max_gap, threshold) if prune else None

    def run(root: int):
        return _mine_subtree(db, params, threshold, root, frequent, cmap, kernels)

    roots = [int(r) for r in frequent]
    if jobs == 0:
        jobs = os.cpu_count() or 1
    if jobs > 1 and len(roots) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, roots))
    else:
        results = [run(r) for r in roots]

    stats = MiningStats()
    patterns: list[Pattern] = []
    for found, sub in results:
        patterns.extend(found)
        stats.merge(sub)
    return PatternSet(db.alphabet, len(db), params, patterns, stats)
