"""Gap-constrained sequential pattern mining over DA symbol sequences."""

from .bruteforce import mine_bruteforce
from .database import (
    MiningError,
    MiningParams,
    MiningStats,
    Pattern,
    PatternSet,
    SequenceDatabase,
    build_database,
    database_from_lists,
)
from .kernels import BACKENDS, DEFAULT_BACKEND, get_backend
from .miner import cooccurrence_map, mine
from .occurrence import contains, occurrence_starts, support_count
from .serialize import patternset_to_json, patternset_to_tsv, patternset_from_json

__all__ = [
    "BACKENDS",
    "DEFAULT_BACKEND",
    "MiningError",
    "MiningParams",
    "MiningStats",
    "Pattern",
    "PatternSet",
    "SequenceDatabase",
    "build_database",
    "contains",
    "cooccurrence_map",
    "database_from_lists",
    "get_backend",
    "mine",
    "mine_bruteforce",
    "occurrence_starts",
    "patternset_from_json",
    "patternset_to_json",
    "patternset_to_tsv",
    "support_count",
]
