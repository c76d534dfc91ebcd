from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from dpm.corpus import DialogueTurn
from dpm.spm import BACKENDS, MiningParams, database_from_lists

DATA = Path(__file__).parent / "data"
PKG_DATA = Path(__file__).parents[1] / "src" / "dpm" / "data"
FIXTURE_TRANSCRIPTS = PKG_DATA / "fixture_transcripts.jsonl"
FIXTURE_LABELS = PKG_DATA / "fixture_labels.tsv"

T0 = datetime(2025, 1, 10, 9, 0, tzinfo=timezone.utc)

DB1 = {"S1": "abab", "S2": "abcb", "S3": "baba", "S4": "acbc"}

GRID = [
    MiningParams(min_support=s, max_gap=g, min_len=m)
    for s in (0.25, 0.5, 0.75, 1.0)
    for g in (1, 2, None)
    for m in (1, 2)
]


def random_database(rng: random.Random, max_seqs=8, max_len=10, max_alpha=6):
    n = rng.randint(1, max_seqs)
    alphabet = "abcdefgh"[: rng.randint(1, max_alpha)]
    return database_from_lists(
        {f"s{i}": [rng.choice(alphabet) for _ in range(rng.randint(1, max_len))] for i in range(n)}
    )


def turn(id, minutes=0.0, role="student", user="u1", text="hello", da=None, session=None, **kw):
    return DialogueTurn(
        id=id,
        timestamp=T0 + timedelta(minutes=minutes),
        role=role,
        user_id=user,
        text=text,
        session_id=session,
        da_code=da,
        **kw,
    )


@pytest.fixture
def db1():
    return database_from_lists(DB1)


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return request.param


# --- acceptance summary -------------------------------------------------------

_CRITERIA: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = report.keywords.get("acceptance")
    if marker is None:
        return
    title = getattr(report, "criterion_title", None) or report.nodeid
    _CRITERIA.append(("PASS" if report.passed else "FAIL", title))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None and marker.args:
        report.criterion_title = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for status, title in _CRITERIA:
        terminalreporter.write_line(f"{status}  {title}")
