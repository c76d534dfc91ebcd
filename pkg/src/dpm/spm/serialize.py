from __future__ import annotations

import json

from .database import MiningParams, Pattern, PatternSet

PATTERN_SEP = " - "


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def patternset_to_dict(ps: PatternSet) -> dict:
    return {
        "params": ps.params.to_dict(),
        "n_sequences": ps.n_sequences,
        "absolute_threshold": ps.params.absolute_threshold(ps.n_sequences),
        "alphabet": list(ps.alphabet),
        "patterns": [
            {
                "pattern": list(ps.render(p)),
                "support": p.support,
                "rel_support": float(ps.relative_support(p)),
                "supporting_ids": list(p.supporting_ids),
            }
            for p in ps.patterns
        ],
    }


def patternset_to_json(ps: PatternSet) -> str:
    return _dump(patternset_to_dict(ps))


def patternset_to_tsv(ps: PatternSet) -> str:
    lines = ["pattern\tsupport\trel_support"]
    for p in ps.patterns:
        lines.append(f"{PATTERN_SEP.join(ps.render(p))}\t{p.support}\t{float(ps.relative_support(p)):.4f}")
    return "\n".join(lines) + "\n"


def patternset_from_json(text: str) -> PatternSet:
    data = json.loads(text)
    alphabet = tuple(data["alphabet"])
    ids = {s: i for i, s in enumerate(alphabet)}
    params = MiningParams(**data["params"])
    patterns = [
        Pattern(tuple(ids[s] for s in item["pattern"]), item["support"], tuple(item["supporting_ids"]))
        for item in data["patterns"]
    ]
    return PatternSet(alphabet, data["n_sequences"], params, patterns)
