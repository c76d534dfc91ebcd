"""Transcript records, sessionization and descriptive corpus statistics."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from fractions import Fraction
from itertools import groupby
from typing import IO, Iterable, Mapping, Sequence

ROLES = ("student", "chatbot")
DEFAULT_GAP = timedelta(minutes=15)


class TranscriptError(ValueError):
    """Malformed transcript input; carries the offending line and field."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


class SessionError(ValueError):
    pass


@dataclass(frozen=True)
class DialogueTurn:
    id: str
    timestamp: datetime
    role: str
    user_id: str
    text: str
    model_name: str = ""
    session_id: str | None = None
    da_code: str | None = None
    da_secondary: tuple[str, ...] = ()

    @property
    def word_count(self) -> int:
        return len(self.text.split())


@dataclass(frozen=True)
class Session:
    session_id: str
    user_id: str
    turns: tuple[DialogueTurn, ...]
    group_label: str | None = None

    def __len__(self) -> int:
        return len(self.turns)


# --- timestamps -------------------------------------------------------------


def parse_timestamp(value: str) -> datetime:
    """ISO 8601 to an aware UTC datetime truncated to milliseconds."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError("timestamp lacks a UTC designator")
    ts = ts.astimezone(timezone.utc)
    return ts.replace(microsecond=ts.microsecond // 1000 * 1000)


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


# --- JSONL transcript format ------------------------------------------------

_REQUIRED = ("id", "ts", "role", "user", "text")
_OPTIONAL_STR = ("model", "session", "da")


def _record_to_turn(rec: dict, lineno: int) -> DialogueTurn:
    if not isinstance(rec, dict):
        raise TranscriptError("record is not a JSON object", lineno)
    for key in _REQUIRED:
        if key not in rec:
            raise TranscriptError("missing required field", lineno, key)
        if not isinstance(rec[key], str):
            raise TranscriptError("must be a string", lineno, key)
    for key in _OPTIONAL_STR:
        if rec.get(key) is not None and not isinstance(rec[key], str):
            raise TranscriptError("must be a string", lineno, key)
    if not rec["id"]:
        raise TranscriptError("must be nonempty", lineno, "id")
    if rec["role"] not in ROLES:
        raise TranscriptError(f"unknown role {rec['role']!r}; expected one of {ROLES}", lineno, "role")
    try:
        ts = parse_timestamp(rec["ts"])
    except ValueError as exc:
        raise TranscriptError(f"bad timestamp {rec['ts']!r} ({exc})", lineno, "ts") from None
    da = rec.get("da") or None
    if not rec["text"] and da is None:
        raise TranscriptError("empty text is only allowed on annotated turns", lineno, "text")
    secondary = rec.get("da_secondary") or []
    if isinstance(secondary, str):
        secondary = [secondary]
    if not all(isinstance(s, str) for s in secondary):
        raise TranscriptError("must be a string or list of strings", lineno, "da_secondary")
    return DialogueTurn(
        id=rec["id"],
        timestamp=ts,
        role=rec["role"],
        user_id=rec["user"],
        text=rec["text"],
        model_name=rec.get("model") or "",
        session_id=rec.get("session") or None,
        da_code=da,
        da_secondary=tuple(secondary),
    )


def parse_transcript(source: IO[str] | Iterable[str]) -> list[DialogueTurn]:
    """Read JSONL transcript records in file order.

    Blank lines are skipped.  Raises :class:`TranscriptError` naming the line
    (and field, where one is at fault) on the first bad record.
    """
    turns: list[DialogueTurn] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TranscriptError(f"invalid JSON ({exc.msg})", lineno) from None
        turn = _record_to_turn(rec, lineno)
        if turn.id in seen:
            raise TranscriptError(f"duplicate id {turn.id!r} (first on line {seen[turn.id]})", lineno, "id")
        seen[turn.id] = lineno
        turns.append(turn)
    return turns


def turn_to_record(turn: DialogueTurn) -> dict:
    rec = {
        "id": turn.id,
        "ts": format_timestamp(turn.timestamp),
        "role": turn.role,
        "user": turn.user_id,
        "text": turn.text,
    }
    if turn.model_name:
        rec["model"] = turn.model_name
    if turn.session_id is not None:
        rec["session"] = turn.session_id
    if turn.da_code is not None:
        rec["da"] = turn.da_code
    if turn.da_secondary:
        rec["da_secondary"] = list(turn.da_secondary)
    return rec


def write_transcript(turns: Iterable[DialogueTurn]) -> str:
    return "".join(json.dumps(turn_to_record(t), ensure_ascii=False) + "\n" for t in turns)


def parse_labels(source: IO[str] | Iterable[str]) -> dict[str, str]:
    """Two-column TSV ``session_id<TAB>group_label``; ``#`` lines are comments."""
    labels: dict[str, str] = {}
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise TranscriptError("expected session_id<TAB>group_label", lineno)
        sid, label = parts
        if sid in labels and labels[sid] != label:
            raise TranscriptError(f"conflicting labels for session {sid!r}", lineno)
        labels[sid] = label
    return labels


# --- sessionization ---------------------------------------------------------


def _sorted_turns(turns: Iterable[DialogueTurn]) -> list[DialogueTurn]:
    return sorted(turns, key=lambda t: t.timestamp)


def _check_gaps(session_id: str, turns: Sequence[DialogueTurn], gap_threshold: timedelta) -> None:
    for prev, cur in zip(turns, turns[1:]):
        if cur.timestamp - prev.timestamp >= gap_threshold:
            raise SessionError(
                f"session {session_id!r}: gap of {cur.timestamp - prev.timestamp} before turn "
                f"{cur.id!r} is not under {gap_threshold}; rerun with resessionize"
            )


def sessionize(
    turns: Sequence[DialogueTurn],
    gap_threshold: timedelta = DEFAULT_GAP,
    *,
    resessionize: bool = False,
) -> list[Session]:
    """Split one user's turns into sessions.

    A new session starts wherever the gap to the previous turn is at least
    ``gap_threshold``.  New sessions are named ``<user>#<n>``.  If every turn
    already carries a session id (and ``resessionize`` is false) that grouping
    is kept and only validated.
    """
    if not turns:
        return []
    users = {t.user_id for t in turns}
    if len(users) > 1:
        raise SessionError(f"turns span several users {sorted(users)}; use sessionize_corpus")
    (user,) = users
    ordered = _sorted_turns(turns)

    tagged = [t.session_id is not None for t in ordered]
    if any(tagged) and not resessionize:
        if not all(tagged):
            untagged = [t.id for t in ordered if t.session_id is None]
            raise SessionError(f"user {user!r}: turns {untagged[:5]} lack a session id while others have one")
        groups: dict[str, list[DialogueTurn]] = defaultdict(list)
        for t in ordered:
            groups[t.session_id].append(t)
        sessions = []
        for sid, members in groups.items():
            _check_gaps(sid, members, gap_threshold)
            sessions.append(Session(sid, user, tuple(members)))
        return sorted(sessions, key=lambda s: (s.turns[0].timestamp, s.session_id))

    runs: list[list[DialogueTurn]] = [[ordered[0]]]
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.timestamp - prev.timestamp >= gap_threshold:
            runs.append([])
        runs[-1].append(cur)
    sessions = []
    for n, run in enumerate(runs, start=1):
        sid = f"{user}#{n}"
        sessions.append(Session(sid, user, tuple(replace(t, session_id=sid) for t in run)))
    return sessions


def sessionize_corpus(
    turns: Sequence[DialogueTurn],
    gap_threshold: timedelta = DEFAULT_GAP,
    *,
    resessionize: bool = False,
    labels: Mapping[str, str] | None = None,
) -> list[Session]:
    """Partition by user, sessionize each, and attach group labels.

    Output is ordered by user id, then session order within the user.
    Session ids must be unique across users.
    """
    by_user = groupby(sorted(turns, key=lambda t: t.user_id), key=lambda t: t.user_id)
    sessions: list[Session] = []
    for _, user_turns in by_user:
        sessions.extend(sessionize(list(user_turns), gap_threshold, resessionize=resessionize))
    seen: dict[str, str] = {}
    for s in sessions:
        if s.session_id in seen:
            raise SessionError(
                f"session id {s.session_id!r} is used by users {seen[s.session_id]!r} and {s.user_id!r}"
            )
        seen[s.session_id] = s.user_id
    if labels is not None:
        sessions = attach_labels(sessions, labels, require=False)
    return sessions


def attach_labels(sessions: Sequence[Session], labels: Mapping[str, str], *, require: bool = True) -> list[Session]:
    if require:
        missing = [s.session_id for s in sessions if s.session_id not in labels]
        if missing:
            raise SessionError(f"no group label for sessions: {', '.join(missing)}")
    return [replace(s, group_label=labels.get(s.session_id, s.group_label)) for s in sessions]


def flatten(sessions: Iterable[Session]) -> list[DialogueTurn]:
    return [t for s in sessions for t in s.turns]


# --- statistics -------------------------------------------------------------


@dataclass(frozen=True)
class GroupStats:
    session_count: int
    total_turns: int
    total_words: int
    mean_turns_per_session: Fraction | None
    mean_words_per_turn: Fraction | None
    mean_words_per_turn_by_role: dict[str, Fraction | None] = field(default_factory=dict)


@dataclass(frozen=True)
class CorpusStats:
    """Per-group statistics; unlabeled sessions are keyed by ``None``."""

    groups: dict[str | None, GroupStats]

    @property
    def total_turns(self) -> int:
        return sum(g.total_turns for g in self.groups.values())


def _mean(num: int, den: int) -> Fraction | None:
    return Fraction(num, den) if den else None


def corpus_stats(sessions: Sequence[Session]) -> CorpusStats:
    """Turns per session and whitespace-token words per turn, by group."""
    buckets: dict[str | None, list[Session]] = defaultdict(list)
    for s in sessions:
        buckets[s.group_label].append(s)
    groups = {}
    for label, members in buckets.items():
        turns = [t for s in members for t in s.turns]
        words = sum(t.word_count for t in turns)
        by_role = {}
        for role in ROLES:
            rt = [t for t in turns if t.role == role]
            by_role[role] = _mean(sum(t.word_count for t in rt), len(rt))
        groups[label] = GroupStats(
            session_count=len(members),
            total_turns=len(turns),
            total_words=words,
            mean_turns_per_session=_mean(len(turns), len(members)),
            mean_words_per_turn=_mean(words, len(turns)),
            mean_words_per_turn_by_role=by_role,
        )
    return CorpusStats(dict(sorted(groups.items(), key=lambda kv: (kv[0] is None, kv[0] or ""))))


def round1(value: Fraction | None) -> str:
    """One-decimal rendering, half away from zero; absent values render as ``-``."""
    if value is None:
        return "-"
    tenths = value * 10
    n = int(abs(tenths) + Fraction(1, 2))
    sign = "-" if tenths < 0 and n else ""
    return f"{sign}{n // 10}.{n % 10}"


def stats_to_dict(stats: CorpusStats) -> dict:
    def num(v):
        return None if v is None else {"value": float(v), "exact": str(v), "display": round1(v)}

    return {
        "groups": [
            {
                "group": label,
                "session_count": g.session_count,
                "total_turns": g.total_turns,
                "total_words": g.total_words,
                "mean_turns_per_session": num(g.mean_turns_per_session),
                "mean_words_per_turn": num(g.mean_words_per_turn),
                "mean_words_per_turn_by_role": {r: num(v) for r, v in g.mean_words_per_turn_by_role.items()},
            }
            for label, g in stats.groups.items()
        ],
        "total_turns": stats.total_turns,
    }


def stats_to_text(stats: CorpusStats) -> str:
    header = "group\tsessions\tturns\tturns/session\twords/turn\tstudent words/turn\tchatbot words/turn"
    lines = [header]
    for label, g in stats.groups.items():
        lines.append(
            "\t".join(
                [
                    label if label is not None else "-",
                    str(g.session_count),
                    str(g.total_turns),
                    round1(g.mean_turns_per_session),
                    round1(g.mean_words_per_turn),
                    round1(g.mean_words_per_turn_by_role.get("student")),
                    round1(g.mean_words_per_turn_by_role.get("chatbot")),
                ]
            )
        )
    return "\n".join(lines) + "\n"
