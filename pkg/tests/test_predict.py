import json
import random
from fractions import Fraction

import pytest

from dpm.annotation import DASequence, DASymbol
from dpm.predict import (
    FeatureMatrix,
    PredictError,
    TreeModel,
    featurize,
    gini,
    loocv,
    predict_label,
    train_tree,
    training_accuracy,
)
from dpm.spm import MiningParams, build_database, mine


def das(sid, label, *syms):
    return DASequence(sid, tuple(DASymbol(p, c) for p, c in (s.split(":") for s in syms)), label)


def matrix(rows, labels):
    """Feature matrix whose frequency column values equal ``rows`` (length-1000 sequences)."""
    return FeatureMatrix(
        session_ids=tuple(f"r{i}" for i in range(len(rows))),
        labels=tuple(labels),
        patterns=tuple((f"p{j}",) for j in range(len(rows[0]))),
        starts=tuple(tuple(rows_i) for rows_i in rows),
        lengths=tuple([1000] * len(rows)),
    )


class TestFeaturize:
    def test_abab(self):
        seq = das("x", "HP", "t:a", "t:b", "t:a", "t:b")
        fm = featurize([seq], [("[t]a", "[t]b")], 1)
        assert fm.presence == [[1]] and fm.frequency == [[0.5]]

    def test_absent(self):
        fm = featurize([das("x", "HP", "t:a", "t:b")], [("[t]c", "[t]a")], 1)
        assert fm.presence == [[0]] and fm.frequency == [[0.0]]

    def test_whole_sequence(self):
        fm = featurize([das("x", "HP", "t:a", "s:b", "t:c")], [("[t]a", "[s]b", "[t]c")], 1)
        assert fm.presence == [[1]] and fm.frequency == [[1 / 3]]

    def test_unlabeled(self):
        with pytest.raises(PredictError):
            featurize([das("x", None, "t:a")], [("[t]a",)], 1)

    def test_no_patterns(self):
        with pytest.raises(PredictError):
            featurize([das("x", "HP", "t:a")], [], 1)

    def test_presence_matches_supporting_ids(self):
        rng = random.Random(2)
        seqs = [das(f"s{i}", "G", *[f"t:{rng.choice('abc')}" for _ in range(rng.randint(1, 9))]) for i in range(8)]
        for gap in (1, 2, None):
            ps = mine(build_database(seqs), MiningParams(min_support=0.25, max_gap=gap, min_len=1))
            fm = featurize(seqs, [ps.render(p) for p in ps], gap)
            for j, p in enumerate(ps):
                holders = {sid for sid, row in zip(fm.session_ids, fm.presence) if row[j]}
                assert holders == set(p.supporting_ids)
            for row in fm.frequency:
                assert all(0 <= v <= 1 for v in row)


class TestGini:
    def test_pure(self):
        assert gini(["HP"] * 5) == 0

    def test_even(self):
        assert gini(["HP"] * 4 + ["LP"] * 4) == Fraction(1, 2)

    def test_three_one(self):
        assert gini(["HP"] * 3 + ["LP"]) == Fraction(3, 8)

    def test_empty(self):
        with pytest.raises(PredictError):
            gini([])


class TestTree:
    def test_separable(self):
        fm = matrix([[1], [1], [0], [0]], ["HP", "HP", "LP", "LP"])
        model = train_tree(fm, feature_kind="presence")
        assert model.depth() == 1 and model.root.feature == 0 and model.root.threshold == 0.5
        assert training_accuracy(model, fm) == 1
        assert predict_label(model, [1]) == "HP" and predict_label(model, [0]) == "LP"

    def test_identical_rows(self):
        fm = matrix([[3], [3], [3]], ["LP", "HP", "LP"])
        model = train_tree(fm)
        assert model.root.is_leaf and model.root.label == "LP"
        assert predict_label(model, [99]) == "LP"

    def test_majority_tie_breaks_lexicographically(self):
        model = train_tree(matrix([[1], [1]], ["LP", "HP"]))
        assert model.root.label == "HP"

    def test_xor(self):
        # every root split has zero gain; (f0, 0.5) wins by order, then each child splits f1
        fm = matrix([[0, 0], [0, 1], [1, 0], [1, 1]], ["A", "B", "B", "A"])
        model = train_tree(fm, max_depth=2, feature_kind="presence")
        assert model.root.feature == 0
        assert model.root.left.feature == 1 and model.root.right.feature == 1
        assert training_accuracy(model, fm) == 1
        assert training_accuracy(train_tree(fm, max_depth=1, feature_kind="presence"), fm) == Fraction(1, 2)

    def test_single_row(self):
        model = train_tree(matrix([[1]], ["HP"]))
        assert model.root.is_leaf and model.root.label == "HP"

    def test_width_mismatch(self):
        model = train_tree(matrix([[1, 0], [0, 1]], ["A", "B"]))
        with pytest.raises(PredictError):
            predict_label(model, [1])

    def test_min_leaf(self):
        fm = matrix([[0], [1], [2], [3]], ["A", "B", "B", "B"])
        model = train_tree(fm, min_leaf_size=2)
        assert model.root.threshold == pytest.approx(0.0015)
        assert all(sum(leaf.counts.values()) >= 2 for leaf in model.leaves())

    def test_serialization_round_trip(self):
        rng = random.Random(4)
        fm = matrix([[rng.randint(0, 9) for _ in range(3)] for _ in range(20)], [rng.choice("AB") for _ in range(20)])
        model = train_tree(fm)
        again = TreeModel.from_dict(json.loads(model.to_json()))
        assert again.to_json() == model.to_json()
        assert train_tree(fm).to_json() == model.to_json()

    def test_rules_render(self):
        model = train_tree(matrix([[5], [5], [0]], ["HP", "HP", "LP"]))
        text = model.render()
        assert "if freq(p0) <= 0.0025:" in text and "→ HP (2/2)" in text

    @pytest.mark.parametrize("seed", range(15))
    def test_invariants(self, seed):
        rng = random.Random(seed)
        n = rng.randint(4, 20)
        rows = [[rng.randint(0, 6) for _ in range(3)] for _ in range(n)]
        labels = [rng.choice(["HP", "LP", "MP"]) for _ in range(n)]
        fm = matrix(rows, labels)
        accs = [training_accuracy(train_tree(fm, max_depth=d), fm) for d in range(6)]
        assert accs == sorted(accs)
        model = train_tree(fm, max_depth=4)
        assert model.depth() <= 4
        assert sum(sum(leaf.counts.values()) for leaf in model.leaves()) == n
        # scaling every value leaves structure and routing unchanged
        scaled = matrix([[v * 7 for v in r] for r in rows], labels)
        other = train_tree(scaled, max_depth=4)

        def shape(node):
            return None if node.is_leaf else (node.feature, shape(node.left), shape(node.right))

        assert shape(model.root) == shape(other.root)
        X, Xs = fm.frequency, scaled.frequency
        assert [predict_label(model, x) for x in X] == [predict_label(other, x) for x in Xs]


class TestLoocv:
    def test_separable(self):
        fm = matrix([[1], [1], [1], [0], [0], [0]], ["HP"] * 3 + ["LP"] * 3)
        assert loocv(fm).accuracy == 1

    def test_identical_features_three_one(self):
        # held-out HP: train HP,HP,LP -> HP (right, x3); held-out LP: train HP,HP,HP -> HP (wrong)
        fm = matrix([[1]] * 4, ["HP", "HP", "HP", "LP"])
        assert loocv(fm).accuracy == Fraction(3, 4)

    def test_identical_features_two_two(self):
        # held-out row always leaves the other label as majority
        fm = matrix([[1]] * 4, ["HP", "HP", "LP", "LP"])
        assert loocv(fm).accuracy == 0

    def test_one_row(self):
        with pytest.raises(PredictError):
            loocv(matrix([[1]], ["HP"]))

    def test_folds_ordered_and_parallel_equal(self):
        rng = random.Random(1)
        fm = matrix([[rng.randint(0, 3)] for _ in range(9)], [rng.choice("AB") for _ in range(9)])
        serial = loocv(fm)
        assert [f[0] for f in serial.per_fold] == sorted(fm.session_ids)
        assert loocv(fm, jobs=4) == serial
