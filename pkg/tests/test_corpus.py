import io
import json
import random
from dataclasses import replace
from datetime import timedelta
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import T0, turn
from dpm.corpus import (
    DEFAULT_GAP,
    Session,
    SessionError,
    TranscriptError,
    corpus_stats,
    flatten,
    parse_labels,
    parse_timestamp,
    parse_transcript,
    round1,
    sessionize,
    sessionize_corpus,
    write_transcript,
)


def jsonl(*records):
    return io.StringIO("".join(json.dumps(r) + "\n" for r in records))


def rec(id="t1", ts="2025-01-10T09:00:00.000Z", role="chatbot", user="u1", text="What did you do today?", **kw):
    return dict(id=id, ts=ts, role=role, user=user, text=text, **kw)


class TestParseTranscript:
    def test_chatbot_line(self):
        (t,) = parse_transcript(jsonl(rec(model="m1", da="Q")))
        assert t.role == "chatbot"
        assert t.text == "What did you do today?"
        assert t.model_name == "m1"
        assert t.da_code == "Q"
        assert t.timestamp == T0

    def test_empty_stream(self):
        assert parse_transcript(io.StringIO("")) == []

    def test_duplicate_id_names_line_2(self):
        with pytest.raises(TranscriptError) as err:
            parse_transcript(jsonl(rec(), rec(ts="2025-01-10T09:01:00.000Z")))
        assert err.value.line == 2
        assert err.value.field == "id"

    def test_unknown_role(self):
        with pytest.raises(TranscriptError, match="unknown role") as err:
            parse_transcript(jsonl(rec(role="teacher")))
        assert (err.value.line, err.value.field) == (1, "role")

    @pytest.mark.parametrize(
        "record, field",
        [
            ({"id": "x", "role": "student", "user": "u", "text": "hi"}, "ts"),
            (rec(ts="yesterday"), "ts"),
            (rec(ts="2025-01-10T09:00:00"), "ts"),
            (rec(text=""), "text"),
            (rec(user=3), "user"),
            (rec(da=["Q"]), "da"),
        ],
    )
    def test_bad_fields_are_named(self, record, field):
        with pytest.raises(TranscriptError) as err:
            parse_transcript(jsonl(rec(id="ok"), record))
        assert err.value.line == 2
        assert err.value.field == field

    def test_invalid_json_line(self):
        with pytest.raises(TranscriptError, match="line 1"):
            parse_transcript(io.StringIO("{not json}\n"))

    def test_empty_text_allowed_when_annotated(self):
        (t,) = parse_transcript(jsonl(rec(text="", da="R")))
        assert t.text == "" and t.da_code == "R"

    def test_offset_converted_to_utc(self):
        (t,) = parse_transcript(jsonl(rec(ts="2025-01-10T10:00:00.000+01:00")))
        assert t.timestamp == T0

    def test_secondary_codes_kept(self):
        (t,) = parse_transcript(jsonl(rec(da="Q", da_secondary=["F"])))
        assert t.da_secondary == ("F",)


ts_strategy = st.datetimes(
    min_value=T0.replace(tzinfo=None) - timedelta(days=3000),
    max_value=T0.replace(tzinfo=None) + timedelta(days=3000),
).map(lambda d: d.replace(microsecond=d.microsecond // 1000 * 1000))


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(
            ts_strategy,
            st.sampled_from(["student", "chatbot"]),
            st.text(min_size=1, max_size=20),
            st.one_of(st.none(), st.sampled_from("QRFIMO")),
            st.one_of(st.none(), st.text(min_size=1, max_size=5)),
        ),
        max_size=10,
    )
)
def test_round_trip(rows):
    records = [
        rec(id=f"t{i}", ts=ts.isoformat() + "Z", role=role, text=text, **({"da": da} if da else {}),
            **({"session": s} if s else {}))
        for i, (ts, role, text, da, s) in enumerate(rows)
    ]
    first = parse_transcript(jsonl(*records))
    second = parse_transcript(io.StringIO(write_transcript(first)))
    assert first == second


def test_parse_timestamp_truncates_to_milliseconds():
    assert parse_timestamp("2025-01-10T09:00:00.123456Z").microsecond == 123000


class TestSessionize:
    def test_just_under_threshold_is_one_session(self):
        gap = timedelta(minutes=14, seconds=59, milliseconds=999) / timedelta(minutes=1)
        turns = [turn(f"t{i}", minutes=i * gap) for i in range(5)]
        assert len(sessionize(turns)) == 1

    def test_exact_threshold_splits(self):
        turns = [turn("a", 0), turn("b", 15)]
        assert [len(s) for s in sessionize(turns)] == [1, 1]

    def test_single_turn(self):
        (s,) = sessionize([turn("a")])
        assert s.session_id == "u1#1" and len(s) == 1

    def test_three_turn_trace(self):
        # 0 -> 10m: gap 10m < 15m, same session; 10m -> 30m: gap 20m >= 15m, split
        sessions = sessionize([turn("c", 30), turn("a", 0), turn("b", 10)])
        assert [[t.id for t in s.turns] for s in sessions] == [["a", "b"], ["c"]]
        assert [s.session_id for s in sessions] == ["u1#1", "u1#2"]

    def test_mixed_users_rejected(self):
        with pytest.raises(SessionError):
            sessionize([turn("a"), turn("b", user="u2")])

    def test_input_session_ids_preserved(self):
        turns = [turn("a", 0, session="X"), turn("b", 1, session="Y"), turn("c", 2, session="X")]
        sessions = sessionize(turns)
        assert [(s.session_id, [t.id for t in s.turns]) for s in sessions] == [("X", ["a", "c"]), ("Y", ["b"])]

    def test_input_sessions_with_long_gap_rejected(self):
        with pytest.raises(SessionError, match="resessionize"):
            sessionize([turn("a", 0, session="X"), turn("b", 20, session="X")])

    def test_resessionize_overrides_input(self):
        sessions = sessionize([turn("a", 0, session="X"), turn("b", 20, session="X")], resessionize=True)
        assert [s.session_id for s in sessions] == ["u1#1", "u1#2"]

    def test_partially_tagged_rejected(self):
        with pytest.raises(SessionError):
            sessionize([turn("a", 0, session="X"), turn("b", 1)])

    def test_custom_threshold(self):
        turns = [turn("a", 0), turn("b", 5), turn("c", 9)]
        assert len(sessionize(turns, timedelta(minutes=5))) == 2

    def test_corpus_sorted_by_user_then_index(self):
        turns = [turn("z1", 0, user="zed"), turn("a1", 0, user="amy"), turn("a2", 60, user="amy")]
        sessions = sessionize_corpus(turns, labels={"amy#1": "HP"})
        assert [s.session_id for s in sessions] == ["amy#1", "amy#2", "zed#1"]
        assert [s.group_label for s in sessions] == ["HP", None, None]

    def test_session_id_clash_across_users(self):
        with pytest.raises(SessionError):
            sessionize_corpus([turn("a", session="S"), turn("b", user="u2", session="S")])


gaps = st.lists(st.integers(min_value=0, max_value=40 * 60 * 1000), min_size=1, max_size=30)


@settings(max_examples=200, deadline=None)
@given(gaps, st.integers(min_value=1, max_value=30))
def test_gap_rule_holds(gap_ms, threshold_min):
    threshold = timedelta(minutes=threshold_min)
    t, turns = T0, []
    for i, g in enumerate(gap_ms):
        t += timedelta(milliseconds=g)
        turns.append(replace(turn(f"t{i}"), timestamp=t))
    sessions = sessionize(turns, threshold)
    for s in sessions:
        for a, b in zip(s.turns, s.turns[1:]):
            assert b.timestamp - a.timestamp < threshold
    for prev, nxt in zip(sessions, sessions[1:]):
        assert nxt.turns[0].timestamp - prev.turns[-1].timestamp >= threshold
    assert sum(len(s) for s in sessions) == len(turns)


def test_parse_labels():
    labels = parse_labels(io.StringIO("# comment\nu1#1\tHP\n\nu2#1\tLP\n"))
    assert labels == {"u1#1": "HP", "u2#1": "LP"}
    with pytest.raises(TranscriptError):
        parse_labels(io.StringIO("u1#1 HP\n"))


class TestStats:
    def sessions(self):
        a = Session("a", "u1", (turn("1", text="I am hungry"), turn("2", role="chatbot", text="yes")), "G")
        return [a]

    def test_words_per_turn(self):
        g = corpus_stats(self.sessions()).groups["G"]
        assert g.mean_words_per_turn == Fraction(2)
        assert g.mean_words_per_turn_by_role == {"student": Fraction(3), "chatbot": Fraction(1)}

    def test_turns_per_session(self):
        s80 = Session("a", "u", tuple(turn(f"a{i}") for i in range(80)), "HP")
        s90 = Session("b", "u", tuple(turn(f"b{i}") for i in range(90)), "HP")
        assert corpus_stats([s80, s90]).groups["HP"].mean_turns_per_session == Fraction(85)

    def test_empty(self):
        stats = corpus_stats([])
        assert stats.groups == {} and stats.total_turns == 0

    def test_absent_role_mean_is_none(self):
        g = corpus_stats([Session("a", "u", (turn("1"),), None)]).groups[None]
        assert g.mean_words_per_turn_by_role["chatbot"] is None

    def test_permutation_invariant(self):
        rng = random.Random(3)
        sessions = [
            Session(f"s{i}", "u", tuple(turn(f"{i}.{j}", text="w " * rng.randint(1, 9)) for j in range(rng.randint(1, 6))),
                    rng.choice(["HP", "LP"]))
            for i in range(10)
        ]
        base = corpus_stats(sessions)
        for _ in range(5):
            rng.shuffle(sessions)
            assert corpus_stats(sessions) == base


@pytest.mark.parametrize(
    "value, text",
    [(Fraction(250, 3), "83.3"), (Fraction(260, 3), "86.7"), (Fraction(1, 4), "0.3"), (Fraction(85), "85.0"),
     (Fraction(153, 10), "15.3"), (None, "-")],
)
def test_round1(value, text):
    assert round1(value) == text


def test_default_gap_is_15_minutes():
    assert DEFAULT_GAP == timedelta(minutes=15)


def test_flatten_then_sessionize_preserves_sessions():
    turns = [turn(f"t{i}", minutes=m) for i, m in enumerate([0, 3, 30, 31, 90])]
    once = sessionize(turns)
    again = sessionize(flatten(once))
    assert once == again
