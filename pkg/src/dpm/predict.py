"""Pattern features and a small deterministic CART classifier."""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

from .annotation import DASequence
from .spm.occurrence import occurrence_starts

FEATURE_KINDS = ("frequency", "presence")


class PredictError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureMatrix:
    session_ids: tuple[str, ...]
    labels: tuple[str, ...]
    patterns: tuple[tuple[str, ...], ...]
    starts: tuple[tuple[int, ...], ...]
    lengths: tuple[int, ...]

    @property
    def frequency(self) -> list[list[float]]:
        return [[c / n for c in row] for row, n in zip(self.starts, self.lengths)]

    @property
    def presence(self) -> list[list[int]]:
        return [[int(c > 0) for c in row] for row in self.starts]

    def values(self, kind: str = "frequency") -> list[list[float]]:
        if kind not in FEATURE_KINDS:
            raise PredictError(f"feature kind must be one of {FEATURE_KINDS}")
        return self.frequency if kind == "frequency" else self.presence

    def feature_names(self, kind: str = "frequency") -> list[str]:
        short = "freq" if kind == "frequency" else "has"
        return [f"{short}({','.join(p)})" for p in self.patterns]

    def __len__(self) -> int:
        return len(self.session_ids)


def featurize(
    sequences: Sequence[DASequence],
    patterns: Iterable[Sequence[str]],
    max_gap: int | None = 1,
) -> FeatureMatrix:
    """One row per session, one column per pattern (given as rendered symbols).

    Each cell counts the positions where an occurrence of the pattern
    starts; presence and length-normalised frequency derive from it.
    """
    patterns = tuple(tuple(p) for p in patterns)
    if not patterns:
        raise PredictError("no patterns to featurize")
    seen = set()
    for seq in sequences:
        if seq.group_label is None:
            raise PredictError(f"session {seq.session_id!r} has no group label")
        if seq.session_id in seen:
            raise PredictError(f"duplicate session {seq.session_id!r}")
        if not seq.symbols:
            raise PredictError(f"session {seq.session_id!r} is empty")
        seen.add(seq.session_id)
    rows = []
    for seq in sequences:
        rendered = seq.rendered()
        rows.append(tuple(occurrence_starts(rendered, p, max_gap) for p in patterns))
    return FeatureMatrix(
        session_ids=tuple(s.session_id for s in sequences),
        labels=tuple(s.group_label for s in sequences),
        patterns=patterns,
        starts=tuple(rows),
        lengths=tuple(len(s) for s in sequences),
    )


def gini(labels: Iterable[Hashable]) -> Fraction:
    counts = Counter(labels)
    n = sum(counts.values())
    if n == 0:
        raise PredictError("gini of an empty label set")
    return 1 - sum(Fraction(c, n) ** 2 for c in counts.values())


# --- tree -------------------------------------------------------------------


@dataclass
class TreeNode:
    counts: dict[str, int]
    label: str
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        d: dict = {"label": self.label, "counts": dict(self.counts)}
        if not self.is_leaf:
            d.update(feature=self.feature, threshold=self.threshold, left=self.left.to_dict(), right=self.right.to_dict())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        node = cls(counts=dict(d["counts"]), label=d["label"])
        if "feature" in d:
            node.feature = d["feature"]
            node.threshold = d["threshold"]
            node.left = cls.from_dict(d["left"])
            node.right = cls.from_dict(d["right"])
        return node


@dataclass
class TreeModel:
    root: TreeNode
    feature_names: list[str]
    feature_kind: str = "frequency"
    max_depth: int = 3
    min_leaf_size: int = 1
    classes: list[str] = field(default_factory=list)

    @property
    def width(self) -> int:
        return len(self.feature_names)

    def depth(self) -> int:
        def walk(node, d):
            return d if node.is_leaf else max(walk(node.left, d + 1), walk(node.right, d + 1))

        return walk(self.root, 0)

    def leaves(self) -> list[TreeNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack += [node.right, node.left]
        return out

    def to_dict(self) -> dict:
        return {
            "feature_kind": self.feature_kind,
            "feature_names": list(self.feature_names),
            "classes": list(self.classes),
            "max_depth": self.max_depth,
            "min_leaf_size": self.min_leaf_size,
            "tree": self.root.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(
            root=TreeNode.from_dict(d["tree"]),
            feature_names=list(d["feature_names"]),
            feature_kind=d["feature_kind"],
            max_depth=d["max_depth"],
            min_leaf_size=d["min_leaf_size"],
            classes=list(d["classes"]),
        )

    def render(self) -> str:
        """Indented if/else rules, one leaf per line with its training counts."""
        lines: list[str] = []

        def leaf(node, indent):
            total = sum(node.counts.values())
            lines.append(f"{indent}→ {node.label} ({node.counts.get(node.label, 0)}/{total})")

        def walk(node, indent):
            if node.is_leaf:
                leaf(node, indent)
                return
            name = self.feature_names[node.feature]
            t = f"{node.threshold:.4g}"
            lines.append(f"{indent}if {name} <= {t}:")
            walk(node.left, indent + "    ")
            lines.append(f"{indent}if {name} > {t}:")
            walk(node.right, indent + "    ")

        walk(self.root, "")
        return "\n".join(lines) + "\n"


def _majority(counts: Counter) -> str:
    return min(counts, key=lambda lab: (-counts[lab], lab))


def _best_split(X, y, rows, min_leaf):
    n = len(rows)
    parent = gini(y[r] for r in rows)
    best = None  # (gain, feature, threshold)
    for f in range(len(X[0])):
        values = sorted({X[r][f] for r in rows})
        for lo, hi in zip(values, values[1:]):
            t = (lo + hi) / 2
            left = [r for r in rows if X[r][f] <= t]
            right = [r for r in rows if X[r][f] > t]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            child = (len(left) * gini(y[r] for r in left) + len(right) * gini(y[r] for r in right)) / n
            gain = parent - child
            if best is None or gain > best[0]:
                best = (gain, f, t)
    return best


def train_tree(
    features: FeatureMatrix,
    max_depth: int = 3,
    min_leaf_size: int = 1,
    feature_kind: str = "frequency",
) -> TreeModel:
    """Greedy Gini tree.

    Candidate thresholds are midpoints between consecutive distinct values;
    the first best split in (feature, threshold) order wins, and a split
    with zero gain is still taken while the node is impure (so XOR-like
    data can be separated at the next level).
    """
    if max_depth < 0 or min_leaf_size < 1:
        raise PredictError("max_depth must be >= 0 and min_leaf_size >= 1")
    X = features.values(feature_kind)
    y = features.labels
    if not y:
        raise PredictError("cannot train on zero rows")

    def build(rows: list[int], depth: int) -> TreeNode:
        counts = Counter(y[r] for r in rows)
        node = TreeNode(counts=dict(sorted(counts.items())), label=_majority(counts))
        if depth >= max_depth or len(counts) == 1 or len(rows) < 2 * min_leaf_size:
            return node
        best = _best_split(X, y, rows, min_leaf_size)
        if best is None:
            return node
        _, f, t = best
        node.feature, node.threshold = f, t
        node.left = build([r for r in rows if X[r][f] <= t], depth + 1)
        node.right = build([r for r in rows if X[r][f] > t], depth + 1)
        return node

    return TreeModel(
        root=build(list(range(len(y))), 0),
        feature_names=features.feature_names(feature_kind),
        feature_kind=feature_kind,
        max_depth=max_depth,
        min_leaf_size=min_leaf_size,
        classes=sorted(set(y)),
    )


def predict_label(model: TreeModel, row: Sequence[float]) -> str:
    if len(row) != model.width:
        raise PredictError(f"row has {len(row)} features, model expects {model.width}")
    node = model.root
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.label


def training_accuracy(model: TreeModel, features: FeatureMatrix) -> Fraction:
    X = features.values(model.feature_kind)
    hits = sum(predict_label(model, x) == lab for x, lab in zip(X, features.labels))
    return Fraction(hits, len(features))


def _subset(features: FeatureMatrix, keep: Sequence[int]) -> FeatureMatrix:
    return FeatureMatrix(
        session_ids=tuple(features.session_ids[i] for i in keep),
        labels=tuple(features.labels[i] for i in keep),
        patterns=features.patterns,
        starts=tuple(features.starts[i] for i in keep),
        lengths=tuple(features.lengths[i] for i in keep),
    )


@dataclass(frozen=True)
class LoocvResult:
    accuracy: Fraction
    per_fold: tuple[tuple[str, str, str], ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": float(self.accuracy),
            "correct": sum(t == p for _, t, p in self.per_fold),
            "total": len(self.per_fold),
            "folds": [{"session_id": s, "true": t, "predicted": p} for s, t, p in self.per_fold],
        }


def loocv(
    features: FeatureMatrix,
    max_depth: int = 3,
    min_leaf_size: int = 1,
    feature_kind: str = "frequency",
    jobs: int = 1,
) -> LoocvResult:
    """Leave-one-out: train on every other row, predict the held-out one."""
    n = len(features)
    if n < 2:
        raise PredictError("leave-one-out needs at least 2 rows")
    X = features.values(feature_kind)

    def fold(i: int) -> tuple[str, str, str]:
        model = train_tree(_subset(features, [j for j in range(n) if j != i]), max_depth, min_leaf_size, feature_kind)
        return features.session_ids[i], features.labels[i], predict_label(model, X[i])

    if jobs != 1:
        with ThreadPoolExecutor(max_workers=jobs or None) as pool:
            folds = list(pool.map(fold, range(n)))
    else:
        folds = [fold(i) for i in range(n)]
    folds.sort(key=lambda f: f[0])
    correct = sum(t == p for _, t, p in folds)
    return LoocvResult(Fraction(correct, n), tuple(folds))
