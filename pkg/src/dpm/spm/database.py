"""Sequence database, mining parameters and pattern containers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from ._pykernels import WORD_BITS

if TYPE_CHECKING:
    from ..annotation import DASequence


class MiningError(ValueError):
    pass


def _as_fraction(value: float | Fraction | int) -> Fraction:
    if isinstance(value, float):
        # decimal literal semantics: 0.1 * 30 must give exactly 3
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class MiningParams:
    """Constraints for one mining run.

    ``max_gap`` is the largest position difference between consecutive
    matched symbols (1 = adjacent turns); ``None`` removes the constraint,
    as does ``max_len=None``.
    """

    min_support: float | Fraction = 0.5
    max_gap: int | None = 1
    min_len: int = 2
    max_len: int | None = None

    def __post_init__(self) -> None:
        sup = _as_fraction(self.min_support)
        if not 0 < sup <= 1:
            raise MiningError(f"min_support must be in (0, 1], got {self.min_support}")
        if self.max_gap is not None and (int(self.max_gap) != self.max_gap or self.max_gap < 1):
            raise MiningError(f"max_gap must be an integer >= 1 or None, got {self.max_gap}")
        if self.min_len < 1:
            raise MiningError(f"min_len must be >= 1, got {self.min_len}")
        if self.max_len is not None and self.max_len < self.min_len:
            raise MiningError(f"max_len ({self.max_len}) < min_len ({self.min_len})")

    def absolute_threshold(self, n_sequences: int) -> int:
        return math.ceil(_as_fraction(self.min_support) * n_sequences)

    def to_dict(self) -> dict:
        return {
            "min_support": float(self.min_support),
            "max_gap": self.max_gap,
            "min_len": self.min_len,
            "max_len": self.max_len,
        }


@dataclass(frozen=True)
class SequenceDatabase:
    """Integer-coded sequences plus their vertical bitset index.

    ``bitsets[sym, seq]`` is the row of ``uint64`` words marking where
    ``sym`` occurs in sequence ``seq``.
    """

    alphabet: tuple[str, ...]
    session_ids: tuple[str, ...]
    sequences: tuple[tuple[int, ...], ...]
    bitsets: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self) -> None:
        self.bitsets.setflags(write=False)

    @property
    def symbol_ids(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.alphabet)}

    def __len__(self) -> int:
        return len(self.sequences)

    def encode(self, symbols: Iterable[str]) -> tuple[int, ...]:
        ids = self.symbol_ids
        try:
            return tuple(ids[s] for s in symbols)
        except KeyError as exc:
            raise MiningError(f"unknown symbol {exc.args[0]!r}") from None

    def decode(self, ids: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.alphabet[i] for i in ids)

    def decoded(self) -> dict[str, tuple[str, ...]]:
        return {sid: self.decode(seq) for sid, seq in zip(self.session_ids, self.sequences)}


def database_from_lists(
    sequences: Mapping[str, Sequence[str]] | Sequence[tuple[str, Sequence[str]]],
    alphabet: Sequence[str] | None = None,
) -> SequenceDatabase:
    """Build a database from ``session_id -> symbols``.

    ``alphabet`` fixes the symbol table (so several databases can share one);
    by default it is the sorted set of symbols present.
    """
    items = list(sequences.items()) if isinstance(sequences, Mapping) else list(sequences)
    if not items:
        raise MiningError("cannot build a database from zero sequences")
    seen: set[str] = set()
    for sid, seq in items:
        if not seq:
            raise MiningError(f"sequence {sid!r} is empty")
        if sid in seen:
            raise MiningError(f"duplicate session id {sid!r}")
        seen.add(sid)

    present = sorted({s for _, seq in items for s in seq})
    if alphabet is None:
        alphabet = present
    else:
        alphabet = list(alphabet)
        if len(set(alphabet)) != len(alphabet):
            raise MiningError("alphabet has duplicate symbols")
        missing = set(present) - set(alphabet)
        if missing:
            raise MiningError(f"symbols missing from alphabet: {sorted(missing)}")
    ids = {s: i for i, s in enumerate(alphabet)}

    encoded = tuple(tuple(ids[s] for s in seq) for _, seq in items)
    width = max(1, math.ceil(max(len(seq) for seq in encoded) / WORD_BITS))
    bitsets = np.zeros((len(alphabet), len(encoded), width), dtype=np.uint64)
    for row, seq in enumerate(encoded):
        for pos, sym in enumerate(seq):
            bitsets[sym, row, pos // WORD_BITS] |= np.uint64(1) << np.uint64(pos % WORD_BITS)

    return SequenceDatabase(
        alphabet=tuple(alphabet),
        session_ids=tuple(sid for sid, _ in items),
        sequences=encoded,
        bitsets=bitsets,
    )


def build_database(
    sequences: Sequence[DASequence], alphabet: Sequence[str] | None = None
) -> SequenceDatabase:
    """Encode DA sequences; symbols are numbered in sorted rendered order."""
    return database_from_lists(
        [(seq.session_id, [sym.render() for sym in seq.symbols]) for seq in sequences],
        alphabet=alphabet,
    )


@dataclass(frozen=True, order=True)
class Pattern:
    symbols: tuple[int, ...]
    support: int
    supporting_ids: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def key(self) -> tuple[int, tuple[int, ...]]:
        return (len(self.symbols), self.symbols)


@dataclass
class MiningStats:
    nodes: int = 0
    candidates_evaluated: int = 0

    def merge(self, other: "MiningStats") -> None:
        self.nodes += other.nodes
        self.candidates_evaluated += other.candidates_evaluated


@dataclass
class PatternSet:
    alphabet: tuple[str, ...]
    n_sequences: int
    params: MiningParams
    patterns: list[Pattern]
    stats: MiningStats = field(default_factory=MiningStats, compare=False)

    def __post_init__(self) -> None:
        self.patterns = sorted(self.patterns, key=lambda p: p.key)

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def render(self, pattern: Pattern) -> tuple[str, ...]:
        return tuple(self.alphabet[i] for i in pattern.symbols)

    def as_dict(self) -> dict[tuple[str, ...], int]:
        """``rendered symbols -> support``; handy for assertions."""
        return {self.render(p): p.support for p in self.patterns}

    def relative_support(self, pattern: Pattern) -> Fraction:
        return Fraction(pattern.support, self.n_sequences)
