"""Coding schemes, DA symbols and annotation checks."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Sequence

import yaml

from .corpus import ROLES, Session


class SchemeError(ValueError):
    pass


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class Act:
    code: str
    label: str
    description: str = ""


@dataclass(frozen=True)
class CodingScheme:
    name: str
    roles: dict[str, str]
    acts: tuple[Act, ...]

    def __post_init__(self) -> None:
        if not self.acts:
            raise SchemeError("scheme defines no acts")
        codes = [a.code for a in self.acts]
        for code in codes:
            if not code or re.search(r"[\[\]\s]", code):
                raise SchemeError(f"invalid act code {code!r}: must be nonempty, without brackets or whitespace")
        dup = [c for c, n in Counter(codes).items() if n > 1]
        if dup:
            raise SchemeError(f"duplicate act code {dup[0]!r}")
        if set(self.roles) != set(ROLES):
            raise SchemeError(f"roles must map exactly {ROLES}, got {sorted(self.roles)}")
        prefixes = list(self.roles.values())
        for p in prefixes:
            if not p or re.search(r"[\[\]\s]", p):
                raise SchemeError(f"invalid role prefix {p!r}")
        if len(set(prefixes)) != len(prefixes):
            raise SchemeError("role prefixes must be unique")

    @property
    def codes(self) -> frozenset[str]:
        return frozenset(a.code for a in self.acts)

    def symbol(self, role: str, code: str) -> "DASymbol":
        return DASymbol(self.roles[role], code)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "roles": dict(self.roles),
            "acts": [{"code": a.code, "label": a.label, "description": a.description} for a in self.acts],
        }


DEFAULT_SCHEME = CodingScheme(
    name="default",
    roles={"chatbot": "t", "student": "s"},
    acts=(
        Act("Q", "question", "Asks for information, an opinion or a performance."),
        Act("R", "response", "Answers or takes up a preceding question or prompt."),
        Act("F", "feedback", "Evaluates, corrects or acknowledges the previous contribution."),
        Act("I", "inform", "Explains, models language or gives new information unprompted."),
        Act("M", "management", "Opens, closes or steers the activity; talk about the talk."),
        Act("O", "other", "Off-task, unintelligible or otherwise uncodable."),
    ),
)


def _parse_acts(raw) -> list[Act]:
    if not isinstance(raw, list):
        raise SchemeError("'acts' must be a list")
    acts = []
    for item in raw:
        if isinstance(item, str):
            code, _, label = item.partition(" ")
            acts.append(Act(code, label.strip()))
        elif isinstance(item, dict) and "code" in item:
            acts.append(Act(str(item["code"]), str(item.get("label", "")), str(item.get("description", ""))))
        else:
            raise SchemeError(f"bad act entry {item!r}")
    return acts


def load_scheme(document: str | None = None) -> CodingScheme:
    """Parse a YAML/JSON scheme document, or return the default scheme.

    Keys: ``name``, ``roles`` (role -> prefix), ``acts`` (entries with
    ``code``/``label``/``description``, or ``"CODE label"`` strings).
    ``extends: default`` starts from the built-in roles and acts and
    appends the listed ones.
    """
    if document is None:
        return DEFAULT_SCHEME
    try:
        data = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise SchemeError(f"scheme is not valid YAML/JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SchemeError("scheme document must be a mapping")
    base_acts: list[Act] = []
    roles = dict(DEFAULT_SCHEME.roles)
    extends = data.get("extends")
    if extends == "default":
        base_acts = list(DEFAULT_SCHEME.acts)
    elif extends is not None:
        raise SchemeError(f"unknown base scheme {extends!r}")
    if "roles" in data:
        if not isinstance(data["roles"], dict):
            raise SchemeError("'roles' must be a mapping")
        roles.update({str(k): str(v) for k, v in data["roles"].items()})
    acts = base_acts + _parse_acts(data.get("acts", []))
    return CodingScheme(name=str(data.get("name", "custom")), roles=roles, acts=tuple(acts))


# --- symbols and sequences --------------------------------------------------

_SYMBOL_RE = re.compile(r"^\[([^\[\]\s]+)\]([^\[\]\s]+)$")


@dataclass(frozen=True, order=True)
class DASymbol:
    role_prefix: str
    act_code: str

    def render(self) -> str:
        return f"[{self.role_prefix}]{self.act_code}"

    @classmethod
    def parse(cls, text: str) -> "DASymbol":
        m = _SYMBOL_RE.match(text)
        if not m:
            raise AnnotationError(f"not a DA symbol: {text!r}")
        return cls(m.group(1), m.group(2))

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class DASequence:
    session_id: str
    symbols: tuple[DASymbol, ...]
    group_label: str | None = None

    def __len__(self) -> int:
        return len(self.symbols)

    def rendered(self) -> list[str]:
        return [s.render() for s in self.symbols]


def to_sequence(session: Session, scheme: CodingScheme = DEFAULT_SCHEME) -> DASequence:
    symbols = []
    for turn in session.turns:
        if turn.da_code is None:
            raise AnnotationError(f"turn {turn.id!r} in session {session.session_id!r} is not annotated")
        if turn.da_code not in scheme.codes:
            raise AnnotationError(
                f"turn {turn.id!r} in session {session.session_id!r} has code {turn.da_code!r} "
                f"not in scheme {scheme.name!r}"
            )
        symbols.append(scheme.symbol(turn.role, turn.da_code))
    return DASequence(session.session_id, tuple(symbols), session.group_label)


# --- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Problem:
    turn_id: str
    session_id: str
    da_code: str | None


@dataclass
class ValidationReport:
    scheme: str
    total_turns: int = 0
    missing: list[Problem] = field(default_factory=list)
    unknown: list[Problem] = field(default_factory=list)
    frequencies: dict[str, int] = field(default_factory=dict)
    symbol_frequencies: dict[str, int] = field(default_factory=dict)

    @property
    def valid(self) -> int:
        return self.total_turns - len(self.missing) - len(self.unknown)

    @property
    def ok(self) -> bool:
        return not self.missing and not self.unknown

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "total_turns": self.total_turns,
            "valid": self.valid,
            "missing": len(self.missing),
            "unknown": len(self.unknown),
            "frequencies": dict(self.frequencies),
            "symbol_frequencies": dict(self.symbol_frequencies),
            "missing_turns": [vars(p) for p in self.missing],
            "unknown_turns": [vars(p) for p in self.unknown],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def to_text(self) -> str:
        lines = [
            f"scheme: {self.scheme}",
            f"turns: {self.total_turns}  valid: {self.valid}  missing: {len(self.missing)}  unknown: {len(self.unknown)}",
            "",
            "code\tcount",
        ]
        lines += [f"{code}\t{n}" for code, n in self.frequencies.items()]
        lines += ["", "symbol\tcount"]
        lines += [f"{sym}\t{n}" for sym, n in self.symbol_frequencies.items()]
        for title, probs in (("missing", self.missing), ("unknown", self.unknown)):
            if probs:
                lines += ["", f"{title} annotations:"]
                lines += [f"  {p.session_id}\t{p.turn_id}\t{p.da_code or ''}" for p in probs]
        return "\n".join(lines) + "\n"


def validate_annotations(sessions: Sequence[Session], scheme: CodingScheme = DEFAULT_SCHEME) -> ValidationReport:
    """Report unannotated and out-of-scheme turns and count codes.

    ``frequencies`` is keyed by act code, ``symbol_frequencies`` by
    role-prefixed symbol; both list every scheme entry (zeros included) in
    scheme order.
    """
    report = ValidationReport(scheme=scheme.name)
    codes: Counter[str] = Counter()
    symbols: Counter[str] = Counter()
    for session in sessions:
        for turn in session.turns:
            report.total_turns += 1
            if turn.da_code is None:
                report.missing.append(Problem(turn.id, session.session_id, None))
            elif turn.da_code not in scheme.codes:
                report.unknown.append(Problem(turn.id, session.session_id, turn.da_code))
            else:
                codes[turn.da_code] += 1
                symbols[scheme.symbol(turn.role, turn.da_code).render()] += 1
    report.missing.sort(key=lambda p: (p.session_id, p.turn_id))
    report.unknown.sort(key=lambda p: (p.session_id, p.turn_id))
    report.frequencies = {act.code: codes[act.code] for act in scheme.acts}
    rendered = [scheme.symbol(role, act.code).render() for role in ("chatbot", "student") for act in scheme.acts]
    report.symbol_frequencies = {sym: symbols[sym] for sym in rendered}
    return report


# --- agreement --------------------------------------------------------------


def cohen_kappa(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """Cohen's kappa between two annotators' labels for the same items.

    A single shared label (chance agreement 1) with full agreement gives 1.
    """
    if len(a) != len(b):
        raise ValueError(f"label lists differ in length ({len(a)} vs {len(b)})")
    if not a:
        raise ValueError("label lists are empty")
    n = len(a)
    observed = Fraction(sum(x == y for x, y in zip(a, b)), n)
    ca, cb = Counter(a), Counter(b)
    expected = sum(Fraction(ca[k] * cb[k], n * n) for k in ca.keys() & cb.keys())
    if expected == 1:
        return 1.0 if observed == 1 else 0.0
    return float((observed - expected) / (1 - expected))
