"""Batch command-line interface.

Every subcommand reads transcripts (plus labels and an optional scheme),
runs its stage and writes files under ``--out``.  ``ingest`` writes the
sessionized transcript back out with session ids filled in, so later
stages can be pointed at it and reuse the same grouping.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import timedelta
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .annotation import AnnotationError, SchemeError, load_scheme, to_sequence, validate_annotations
from .contrast import (
    ContrastReport,
    contrast,
    group_databases,
    report_to_json,
    report_to_markdown,
    report_to_tsv,
)
from .corpus import (
    SessionError,
    TranscriptError,
    attach_labels,
    corpus_stats,
    flatten,
    parse_labels,
    parse_transcript,
    round1,
    sessionize_corpus,
    stats_to_dict,
    stats_to_text,
    write_transcript,
)
from .predict import FEATURE_KINDS, PredictError, featurize, loocv, train_tree, training_accuracy
from .spm import MiningError, MiningParams, build_database, mine, patternset_to_json, patternset_to_tsv
from .spm.kernels import BACKENDS

FORMATS = ("json", "tsv", "md")


class CliError(Exception):
    pass


# --- argument handling ------------------------------------------------------


def _positive_int_or_inf(text: str) -> int | None:
    if text.lower() in ("inf", "none", "unbounded"):
        return None
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1 or 'inf'")
    return value


def _formats(text: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [p for p in parts if p not in FORMATS]
    if bad or not parts:
        raise argparse.ArgumentTypeError(f"formats must be drawn from {FORMATS}")
    return parts


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--transcripts", required=True, type=Path, help="JSONL transcript file")
    p.add_argument("--labels", type=Path, help="TSV of session_id<TAB>group_label")
    p.add_argument("--scheme", type=Path, help="coding scheme (YAML/JSON); built-in default if omitted")
    p.add_argument("--gap-minutes", type=float, default=15.0, help="session gap threshold (default 15)")
    p.add_argument(
        "--resessionize",
        action="store_true",
        help="recompute sessions from timestamps even when records carry session ids",
    )
    p.add_argument("--out", type=Path, default=Path("dpm-out"), help="output directory")
    p.add_argument("--format", type=_formats, default=FORMATS, help="comma list of json,tsv,md")
    p.add_argument("--jobs", type=int, default=1, help="worker threads (0 = one per CPU)")


def _mining(p: argparse.ArgumentParser) -> None:
    p.add_argument("--minsup", type=float, default=0.5, help="relative minimum support (default 0.5)")
    p.add_argument("--maxgap", type=_positive_int_or_inf, default=1, help="max position gap, or 'inf' (default 1)")
    p.add_argument("--minlen", type=int, default=2, help="minimum pattern length (default 2)")
    p.add_argument("--maxlen", type=_positive_int_or_inf, default=None, help="maximum pattern length (default inf)")
    p.add_argument("--scope", choices=("per-group", "pooled"), default="per-group")
    p.add_argument("--groups", help="two comma-separated group labels to contrast (default: the only two present)")
    p.add_argument("--backend", choices=sorted(BACKENDS), default=None, help="mining kernel backend")


def _tree(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-depth", type=int, default=3)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--feature-kind", choices=FEATURE_KINDS, default="frequency")
    p.add_argument("--patterns", type=Path, help="contrast.json or patterns_*.json to take features from")
    p.add_argument("--top-k", type=int, default=10, help="rows per section in Markdown output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpm",
        description="Mine dialogue-act patterns from annotated learner-chatbot transcripts.",
        epilog="DPM_SEED is reserved and currently unused: every algorithm is deterministic.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    specs: list[tuple[str, str, Callable, tuple]] = [
        ("ingest", "parse and sessionize transcripts", cmd_ingest, ()),
        ("stats", "turns per session and words per turn by group", cmd_stats, ()),
        ("validate", "check annotations against the scheme", cmd_validate, ()),
        ("mine", "mine frequent DA patterns", cmd_mine, (_mining,)),
        ("contrast", "compare two groups' frequent patterns", cmd_contrast, (_mining, _tree)),
        ("train", "fit a decision tree on pattern features, with LOOCV", cmd_train, (_mining, _tree)),
        ("report", "combined Markdown summary", cmd_report, (_mining, _tree)),
        ("run", "every stage, all outputs", cmd_run, (_mining, _tree)),
    ]
    for name, help_text, func, extras in specs:
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p)
        for add in extras:
            add(p)
        if name == "validate":
            p.add_argument("--strict", action="store_true", help="exit 1 when any turn is missing or unknown")
        p.set_defaults(func=func)
    return parser


# --- shared loading ---------------------------------------------------------


class Context:
    """Inputs loaded once per invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out: Path = args.out
        try:
            self.scheme = load_scheme(_read(args.scheme)) if args.scheme else load_scheme()
        except SchemeError as exc:
            raise CliError(f"{args.scheme}: {exc}") from None
        with _open(args.transcripts) as fh:
            try:
                turns = parse_transcript(fh)
            except TranscriptError as exc:
                raise CliError(f"{args.transcripts}: {exc}") from None
        self.labels: dict[str, str] | None = None
        if args.labels:
            with _open(args.labels) as fh:
                try:
                    self.labels = parse_labels(fh)
                except TranscriptError as exc:
                    raise CliError(f"{args.labels}: {exc}") from None
        gap = timedelta(minutes=args.gap_minutes)
        self.session_source = _session_source(turns, args.resessionize)
        try:
            self.sessions = sessionize_corpus(turns, gap, resessionize=args.resessionize, labels=self.labels)
        except SessionError as exc:
            raise CliError(f"{args.transcripts}: {exc}") from None

    @property
    def params(self) -> MiningParams:
        a = self.args
        return MiningParams(min_support=a.minsup, max_gap=a.maxgap, min_len=a.minlen, max_len=a.maxlen)

    def labelled_sessions(self):
        if self.labels is None:
            raise CliError("--labels is required for group-scoped commands")
        try:
            return attach_labels(self.sessions, self.labels, require=True)
        except SessionError as exc:
            raise CliError(str(exc)) from None

    def sequences(self, labelled: bool = True):
        sessions = self.labelled_sessions() if labelled else self.sessions
        try:
            return [to_sequence(s, self.scheme) for s in sessions]
        except AnnotationError as exc:
            raise CliError(f"{self.args.transcripts}: {exc}") from None

    def pick_groups(self, labels: Sequence[str]) -> tuple[str, str]:
        if self.args.groups:
            chosen = tuple(g.strip() for g in self.args.groups.split(","))
            if len(chosen) != 2 or any(g not in labels for g in chosen):
                raise CliError(f"--groups must name two of {sorted(labels)}")
            return chosen
        if len(labels) != 2:
            raise CliError(f"need exactly two groups to contrast, found {sorted(labels)}; pass --groups")
        return tuple(sorted(labels))

    def write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return path

    def wants(self, fmt: str) -> bool:
        return fmt in self.args.format


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from None


def _open(path: Path):
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from None


def _session_source(turns, resessionize: bool) -> str:
    if resessionize or not turns:
        return "recomputed"
    tagged = {t.session_id is not None for t in turns}
    if tagged == {True}:
        return "input"
    return "recomputed" if tagged == {False} else "mixed"


def _json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# --- stages -----------------------------------------------------------------


def _stats_markdown(stats) -> str:
    lines = [
        "| group | sessions | turns | turns/session | words/turn | student words/turn | chatbot words/turn |",
        "|---|---|---|---|---|---|---|",
    ]
    for label, g in stats.groups.items():
        lines.append(
            f"| {label if label is not None else '-'} | {g.session_count} | {g.total_turns} "
            f"| {round1(g.mean_turns_per_session)} | {round1(g.mean_words_per_turn)} "
            f"| {round1(g.mean_words_per_turn_by_role['student'])} "
            f"| {round1(g.mean_words_per_turn_by_role['chatbot'])} |"
        )
    return "\n".join(lines) + "\n"


def do_ingest(ctx: Context) -> list[Path]:
    written = [ctx.write("sessions.jsonl", write_transcript(flatten(ctx.sessions)))]
    manifest = {
        "transcripts": ctx.args.transcripts.name,
        "gap_minutes": ctx.args.gap_minutes,
        "session_source": ctx.session_source,
        "sessions": [
            {"session_id": s.session_id, "user": s.user_id, "turns": len(s), "group": s.group_label}
            for s in ctx.sessions
        ],
    }
    written.append(ctx.write("ingest.json", _json(manifest)))
    if ctx.labels is not None:
        written.append(ctx.write("labels.tsv", "".join(f"{k}\t{v}\n" for k, v in sorted(ctx.labels.items()))))
    return written


def do_stats(ctx: Context) -> list[Path]:
    stats = corpus_stats(ctx.sessions)
    written = []
    if ctx.wants("json"):
        written.append(ctx.write("stats.json", _json(stats_to_dict(stats))))
    if ctx.wants("tsv"):
        written.append(ctx.write("stats.tsv", stats_to_text(stats)))
    if ctx.wants("md"):
        written.append(ctx.write("stats.md", _stats_markdown(stats)))
    return written


def do_validate(ctx: Context):
    report = validate_annotations(ctx.sessions, ctx.scheme)
    written = []
    if ctx.wants("json"):
        written.append(ctx.write("validation.json", report.to_json()))
    if ctx.wants("tsv") or ctx.wants("md"):
        written.append(ctx.write("validation.txt", report.to_text()))
    return written, report


def _mine_groups(ctx: Context):
    """``{name: PatternSet}`` for the configured scope."""
    params = ctx.params
    if ctx.args.scope == "pooled":
        db = build_database(ctx.sequences(labelled=False))
        return {"pooled": mine(db, params, backend=ctx.args.backend, jobs=ctx.args.jobs)}
    dbs = group_databases(ctx.sequences())
    return {label: mine(db, params, backend=ctx.args.backend, jobs=ctx.args.jobs) for label, db in dbs.items()}


def do_mine(ctx: Context) -> list[Path]:
    written = []
    for name, ps in _mine_groups(ctx).items():
        if ctx.wants("json"):
            written.append(ctx.write(f"patterns_{name}.json", patternset_to_json(ps)))
        if ctx.wants("tsv"):
            written.append(ctx.write(f"patterns_{name}.tsv", patternset_to_tsv(ps)))
    return written


def _contrast(ctx: Context) -> ContrastReport:
    dbs = group_databases(ctx.sequences())
    a, b = ctx.pick_groups(list(dbs))
    return contrast(dbs[a], dbs[b], ctx.params, labels=(a, b), backend=ctx.args.backend, jobs=ctx.args.jobs)


def do_contrast(ctx: Context, report: ContrastReport | None = None):
    report = report or _contrast(ctx)
    written = []
    if ctx.wants("json"):
        written.append(ctx.write("contrast.json", report_to_json(report)))
    if ctx.wants("tsv"):
        written.append(ctx.write("contrast.tsv", report_to_tsv(report)))
    if ctx.wants("md"):
        written.append(ctx.write("contrast.md", report_to_markdown(report, ctx.args.top_k)))
    return written, report


def _feature_patterns(ctx: Context, report: ContrastReport | None) -> list[tuple[str, ...]]:
    if ctx.args.patterns:
        data = json.loads(_read(ctx.args.patterns))
        if "patterns" in data:
            pats = [tuple(p["pattern"]) for p in data["patterns"]]
        else:
            pats = [tuple(e["pattern"]) for key in ("unique_to_a", "unique_to_b", "shared") for e in data[key]]
        return sorted(set(pats), key=lambda s: (len(s), s))
    if ctx.args.scope == "pooled":
        (ps,) = _mine_groups(ctx).values()
        return sorted({ps.render(p) for p in ps}, key=lambda s: (len(s), s))
    report = report or _contrast(ctx)
    return report.patterns()


def do_train(ctx: Context, report: ContrastReport | None = None):
    a = ctx.args
    patterns = _feature_patterns(ctx, report)
    if not patterns:
        raise CliError("no frequent patterns to use as features; lower --minsup or --minlen")
    features = featurize(ctx.sequences(), patterns, a.maxgap)
    model = train_tree(features, a.max_depth, a.min_leaf, a.feature_kind)
    cv = loocv(features, a.max_depth, a.min_leaf, a.feature_kind, jobs=a.jobs)
    summary = cv.to_dict()
    summary["training_accuracy"] = float(training_accuracy(model, features))
    summary["n_features"] = len(patterns)
    written = [
        ctx.write("model.json", model.to_json()),
        ctx.write("rules.txt", model.render()),
        ctx.write("loocv.json", _json(summary)),
    ]
    if ctx.wants("tsv"):
        header = "session_id\tgroup\t" + "\t".join(features.feature_names(a.feature_kind))
        rows = [
            f"{sid}\t{lab}\t" + "\t".join(f"{v:.6g}" for v in vals)
            for sid, lab, vals in zip(features.session_ids, features.labels, features.values(a.feature_kind))
        ]
        written.append(ctx.write("features.tsv", "\n".join([header, *rows]) + "\n"))
    return written, model, cv


def do_report(ctx: Context) -> list[Path]:
    a = ctx.args
    stats = corpus_stats(ctx.sessions)
    validation = validate_annotations(ctx.sessions, ctx.scheme)
    report = _contrast(ctx)
    patterns = report.patterns()
    parts = [
        "# Dialogue-act pattern report",
        "",
        f"Transcripts: `{a.transcripts.name}`; sessions {ctx.session_source} "
        f"(gap threshold {a.gap_minutes:g} min); scheme `{ctx.scheme.name}`.",
        "",
        "## Corpus",
        "",
        _stats_markdown(stats),
        "## Annotation",
        "",
        f"{validation.total_turns} turns: {validation.valid} valid, {len(validation.missing)} missing, "
        f"{len(validation.unknown)} unknown.",
        "",
        "| code | count |",
        "|---|---|",
        *[f"| {code} | {n} |" for code, n in validation.frequencies.items()],
        "",
        report_to_markdown(report, a.top_k).replace("## Contrast", "## Patterns"),
    ]
    if patterns:
        features = featurize(ctx.sequences(), patterns, a.maxgap)
        model = train_tree(features, a.max_depth, a.min_leaf, a.feature_kind)
        cv = loocv(features, a.max_depth, a.min_leaf, a.feature_kind, jobs=a.jobs)
        correct = sum(t == p for _, t, p in cv.per_fold)
        parts += [
            "## Classifier",
            "",
            f"Decision tree over {len(patterns)} pattern features ({a.feature_kind}), "
            f"max depth {a.max_depth}; leave-one-out accuracy {correct}/{len(cv.per_fold)} "
            f"({float(cv.accuracy):.3f}).",
            "",
            "```",
            model.render().rstrip("\n"),
            "```",
            "",
        ]
    return [ctx.write("report.md", "\n".join(parts))]


# --- commands ---------------------------------------------------------------


def _announce(paths: Sequence[Path]) -> None:
    for p in paths:
        print(f"wrote {p}")


def cmd_ingest(ctx: Context) -> int:
    _announce(do_ingest(ctx))
    print(f"{len(ctx.sessions)} sessions ({ctx.session_source} session ids)")
    return 0


def cmd_stats(ctx: Context) -> int:
    _announce(do_stats(ctx))
    sys.stdout.write(stats_to_text(corpus_stats(ctx.sessions)))
    return 0


def cmd_validate(ctx: Context) -> int:
    written, report = do_validate(ctx)
    _announce(written)
    print(f"valid {report.valid}, missing {len(report.missing)}, unknown {len(report.unknown)}")
    return 1 if ctx.args.strict and not report.ok else 0


def cmd_mine(ctx: Context) -> int:
    _announce(do_mine(ctx))
    return 0


def cmd_contrast(ctx: Context) -> int:
    written, report = do_contrast(ctx)
    _announce(written)
    print(
        f"unique to {report.label_a}: {len(report.unique_to_a)}, unique to {report.label_b}: "
        f"{len(report.unique_to_b)}, shared: {len(report.shared)}"
    )
    return 0


def cmd_train(ctx: Context) -> int:
    written, model, cv = do_train(ctx)
    _announce(written)
    sys.stdout.write(model.render())
    print(f"LOOCV accuracy {float(cv.accuracy):.3f}")
    return 0


def cmd_report(ctx: Context) -> int:
    _announce(do_report(ctx))
    return 0


def cmd_run(ctx: Context) -> int:
    written = do_ingest(ctx) + do_stats(ctx)
    written += do_validate(ctx)[0]
    written += do_mine(ctx)
    cw, report = do_contrast(ctx)
    written += cw
    written += do_train(ctx, report)[0]
    written += do_report(ctx)
    _announce(written)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = Context(args)
        return args.func(ctx)
    except (CliError, SchemeError, MiningError, PredictError) as exc:
        print(f"dpm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
