"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the raw ``extend`` kernel on a wide bitset index and a full ``mine``
run over a larger random database, then checks both backends agree.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from dpm.spm import BACKENDS, MiningParams, database_from_lists, mine, patternset_to_json


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_case(seed=1, nsym=12, nseq=400, words=8):
    rng = np.random.default_rng(seed)
    index = rng.integers(0, 2**63, size=(nsym, nseq, words), dtype=np.uint64)
    index &= rng.integers(0, 2**63, size=index.shape, dtype=np.uint64)
    prefix = index[0] & rng.integers(0, 2**63, size=(nseq, words), dtype=np.uint64)
    return prefix, index, np.arange(nsym, dtype=np.int64)


def mining_case(seed=2, nseq=200, length=(80, 300), alphabet="ABCDEFGHIJKL"):
    rng = random.Random(seed)
    return database_from_lists(
        {f"s{i}": [rng.choice(alphabet) for _ in range(rng.randint(*length))] for i in range(nseq)}
    )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    prefix, index, cand = kernel_case()
    db = mining_case()
    params = [MiningParams(min_support=0.3, max_gap=1), MiningParams(min_support=0.5, max_gap=3),
              MiningParams(min_support=0.9, max_gap=None, max_len=4)]

    print(f"backends: {', '.join(sorted(BACKENDS))}")
    print(f"kernel index {index.shape}, database {len(db)} sequences\n")
    print(f"{'case':<34}" + "".join(f"{name:>12}" for name in sorted(BACKENDS)))

    rows = [(f"extend gap={g or 'inf'}", lambda name, g=g: BACKENDS[name].extend(prefix, index, cand, g)) for g in (1, 5, 0)]
    for p in params:
        gap = "inf" if p.max_gap is None else p.max_gap
        rows.append((f"mine minsup={p.min_support} gap={gap}", lambda name, p=p: mine(db, p, backend=name)))

    for label, fn in rows:
        cells = []
        for name in sorted(BACKENDS):
            cells.append(best_of(args.repeat, lambda: fn(name)))
        print(f"{label:<34}" + "".join(f"{c * 1000:>10.2f}ms" for c in cells))

    outputs = {name: [patternset_to_json(mine(db, p, backend=name)) for p in params] for name in BACKENDS}
    agree = len({tuple(v) for v in outputs.values()}) == 1
    print(f"\nbackends agree: {agree}")
    return 0 if agree else 1


if __name__ == "__main__":
    raise SystemExit(main())
