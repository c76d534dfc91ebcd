"""Group-versus-group comparison of frequent pattern sets."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .annotation import DASequence
from .spm import MiningError, MiningParams, PatternSet, SequenceDatabase, build_database, mine, support_count
from .spm.serialize import PATTERN_SEP


@dataclass(frozen=True)
class ContrastEntry:
    symbols: tuple[str, ...]
    support_a: int
    support_b: int
    rel_a: Fraction
    rel_b: Fraction
    ids_a: tuple[str, ...]
    ids_b: tuple[str, ...]

    @property
    def growth_rate(self) -> Fraction | float:
        """``rel_a / rel_b``; infinite when the pattern never occurs in B."""
        return math.inf if self.rel_b == 0 else self.rel_a / self.rel_b

    @property
    def difference(self) -> Fraction:
        return self.rel_a - self.rel_b

    def mirrored(self) -> "ContrastEntry":
        return ContrastEntry(
            self.symbols, self.support_b, self.support_a, self.rel_b, self.rel_a, self.ids_b, self.ids_a
        )


@dataclass(frozen=True)
class ContrastReport:
    label_a: str
    label_b: str
    n_a: int
    n_b: int
    params: MiningParams
    unique_to_a: tuple[ContrastEntry, ...]
    unique_to_b: tuple[ContrastEntry, ...]
    shared: tuple[ContrastEntry, ...]

    def patterns(self) -> list[tuple[str, ...]]:
        """All reported patterns, canonically ordered (length, then symbols)."""
        entries = self.unique_to_a + self.unique_to_b + self.shared
        return sorted({e.symbols for e in entries}, key=lambda s: (len(s), s))

    def section(self, name: str) -> tuple[ContrastEntry, ...]:
        return {"unique_a": self.unique_to_a, "unique_b": self.unique_to_b, "shared": self.shared}[name]


def group_databases(sequences: Sequence[DASequence]) -> dict[str, SequenceDatabase]:
    """One database per group label, all sharing the union symbol table."""
    groups: dict[str, list[DASequence]] = defaultdict(list)
    for seq in sequences:
        if seq.group_label is None:
            raise MiningError(f"session {seq.session_id!r} has no group label")
        groups[seq.group_label].append(seq)
    alphabet = sorted({sym.render() for seq in sequences for sym in seq.symbols})
    return {label: build_database(groups[label], alphabet) for label in sorted(groups)}


def _order(entries: list[ContrastEntry]) -> tuple[ContrastEntry, ...]:
    return tuple(sorted(entries, key=lambda e: (-abs(e.difference), len(e.symbols), e.symbols)))


def contrast(
    db_a: SequenceDatabase,
    db_b: SequenceDatabase,
    params: MiningParams = MiningParams(),
    *,
    labels: tuple[str, str] = ("A", "B"),
    backend: str | None = None,
    jobs: int = 1,
) -> ContrastReport:
    """Split the two groups' frequent patterns into unique-to-A, unique-to-B and shared.

    "Unique" means frequent in one group and below threshold in the other;
    the other group's raw support is still reported.  Each section is sorted
    by descending absolute difference in relative support.
    """
    if db_a.alphabet != db_b.alphabet:
        raise MiningError("databases have different symbol tables; build both from the union corpus")

    def run(db):
        return mine(db, params, backend=backend, jobs=jobs)

    if jobs != 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            ps_a, ps_b = pool.map(run, (db_a, db_b))
    else:
        ps_a, ps_b = run(db_a), run(db_b)

    found_a = {p.symbols: p for p in ps_a}
    found_b = {p.symbols: p for p in ps_b}
    n_a, n_b = len(db_a), len(db_b)

    def entry(symbols):
        if symbols in found_a:
            sa, ia = found_a[symbols].support, found_a[symbols].supporting_ids
        else:
            sa, ia = support_count(db_a, symbols, params.max_gap)
        if symbols in found_b:
            sb, ib = found_b[symbols].support, found_b[symbols].supporting_ids
        else:
            sb, ib = support_count(db_b, symbols, params.max_gap)
        return ContrastEntry(db_a.decode(symbols), sa, sb, Fraction(sa, n_a), Fraction(sb, n_b), ia, ib)

    unique_a = [entry(s) for s in found_a if s not in found_b]
    unique_b = [entry(s) for s in found_b if s not in found_a]
    shared = [entry(s) for s in found_a if s in found_b]
    return ContrastReport(
        labels[0], labels[1], n_a, n_b, params, _order(unique_a), _order(unique_b), _order(shared)
    )


def mirror(report: ContrastReport) -> ContrastReport:
    """The report ``contrast(B, A)`` would produce."""
    return ContrastReport(
        report.label_b,
        report.label_a,
        report.n_b,
        report.n_a,
        report.params,
        tuple(e.mirrored() for e in report.unique_to_b),
        tuple(e.mirrored() for e in report.unique_to_a),
        tuple(e.mirrored() for e in report.shared),
    )


# --- emitters ---------------------------------------------------------------


def _growth_str(g) -> str:
    return "inf" if g == math.inf else f"{float(g):.4f}"


def _entry_dict(e: ContrastEntry) -> dict:
    g = e.growth_rate
    return {
        "pattern": list(e.symbols),
        "support_a": e.support_a,
        "support_b": e.support_b,
        "rel_support_a": float(e.rel_a),
        "rel_support_b": float(e.rel_b),
        "growth_rate": "inf" if g == math.inf else float(g),
        "supporting_ids_a": list(e.ids_a),
        "supporting_ids_b": list(e.ids_b),
    }


def report_to_dict(report: ContrastReport) -> dict:
    return {
        "group_a": report.label_a,
        "group_b": report.label_b,
        "n_a": report.n_a,
        "n_b": report.n_b,
        "params": report.params.to_dict(),
        "unique_to_a": [_entry_dict(e) for e in report.unique_to_a],
        "unique_to_b": [_entry_dict(e) for e in report.unique_to_b],
        "shared": [_entry_dict(e) for e in report.shared],
    }


def report_to_json(report: ContrastReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n"


def report_to_tsv(report: ContrastReport) -> str:
    a, b = report.label_a, report.label_b
    lines = [f"section\tpattern\tsupport_{a}\tsupport_{b}\trel_support_{a}\trel_support_{b}\tgrowth_rate"]
    for name, entries in ((f"unique_{a}", report.unique_to_a), (f"unique_{b}", report.unique_to_b), ("shared", report.shared)):
        for e in entries:
            lines.append(
                f"{name}\t{PATTERN_SEP.join(e.symbols)}\t{e.support_a}\t{e.support_b}"
                f"\t{float(e.rel_a):.4f}\t{float(e.rel_b):.4f}\t{_growth_str(e.growth_rate)}"
            )
    return "\n".join(lines) + "\n"


def report_to_markdown(report: ContrastReport, top_k: int = 10) -> str:
    a, b = report.label_a, report.label_b
    out = [
        f"## Contrast: {a} (n={report.n_a}) vs {b} (n={report.n_b})",
        "",
        f"min_support={float(report.params.min_support):g}, max_gap={report.params.max_gap or 'unbounded'}, "
        f"min_len={report.params.min_len}, max_len={report.params.max_len or 'unbounded'}",
    ]
    for title, entries in (
        (f"Frequent only in {a}", report.unique_to_a),
        (f"Frequent only in {b}", report.unique_to_b),
        ("Frequent in both", report.shared),
    ):
        out += ["", f"### {title} ({len(entries)})", ""]
        if not entries:
            out.append("_none_")
            continue
        out += [f"| pattern | {a} | {b} | growth |", "|---|---|---|---|"]
        for e in entries[:top_k]:
            out.append(
                f"| {PATTERN_SEP.join(e.symbols)} | {e.support_a}/{report.n_a} | {e.support_b}/{report.n_b} "
                f"| {_growth_str(e.growth_rate)} |"
            )
        if len(entries) > top_k:
            out.append(f"| ... {len(entries) - top_k} more | | | |")
    return "\n".join(out) + "\n"


def frequent_set(ps: PatternSet) -> set[tuple[str, ...]]:
    return {ps.render(p) for p in ps}
