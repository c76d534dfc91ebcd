"""Regenerate the bundled synthetic corpus in src/dpm/data/.

Twelve sessions (three users per group, a first-day and a last-day session
each).  HP sessions are built from exchanges where a chatbot question is
always taken up by a student response, often followed by a student
question; LP sessions contain chatbot questions answered by a student
question and never by a response.  Word counts are drawn per turn and then
topped up so each group's total is fixed.

    python scripts/make_fixture.py
"""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

from dpm.corpus import DialogueTurn, write_transcript

OUT = Path(__file__).resolve().parents[1] / "src" / "dpm" / "data"

# (role, code) blocks; "t" = chatbot, "s" = student
HP_BLOCKS = [
    [("t", "Q"), ("s", "R"), ("s", "Q")],
    [("t", "Q"), ("s", "R"), ("s", "Q"), ("t", "I")],
    [("t", "Q"), ("s", "R"), ("t", "F")],
    [("t", "F"), ("t", "Q"), ("s", "R")],
    [("t", "I"), ("s", "R"), ("s", "I")],
    [("t", "M"), ("s", "R")],
]
LP_BLOCKS = [
    [("t", "Q"), ("s", "Q"), ("t", "I")],
    [("t", "Q"), ("s", "Q"), ("t", "I"), ("s", "R")],
    [("t", "Q"), ("s", "O"), ("t", "F")],
    [("t", "I"), ("s", "R"), ("t", "F")],
    [("t", "M"), ("s", "M")],
    [("t", "Q"), ("s", "Q"), ("t", "F"), ("s", "O")],
]
GROUPS = {
    # user -> (label, blocks, [day-1 turns, day-2 turns])
    "hp1": ("HP", HP_BLOCKS, [80, 86]),
    "hp2": ("HP", HP_BLOCKS, [82, 84]),
    "hp3": ("HP", HP_BLOCKS, [83, 85]),
    "lp1": ("LP", LP_BLOCKS, [84, 90]),
    "lp2": ("LP", LP_BLOCKS, [85, 88]),
    "lp3": ("LP", LP_BLOCKS, [86, 87]),
}
WORD_TOTALS = {"HP": 7650, "LP": 5980}
WORDS = (
    "i you we the a to go went like think maybe weekend today yesterday food travel "
    "music friend family work study english speak practice really very good nice interesting"
).split()
ROLE = {"t": "chatbot", "s": "student"}


def session_codes(rng: random.Random, blocks, length: int) -> list[tuple[str, str]]:
    codes: list[tuple[str, str]] = []
    # every session opens with the group's signature exchange
    codes += blocks[0]
    while len(codes) < length:
        codes += rng.choice(blocks)
    return codes[:length]


def main() -> None:
    rng = random.Random(20250110)
    day0 = datetime(2025, 1, 10, 9, 0, tzinfo=timezone.utc)
    turns_by_group: dict[str, list[dict]] = {"HP": [], "LP": []}
    labels = []
    plan = []
    for user, (label, blocks, lengths) in GROUPS.items():
        for day, length in enumerate(lengths):
            clock = day0 + timedelta(days=7 * day, hours=rng.randint(0, 8))
            sid = f"{user}#{day + 1}"
            labels.append((sid, label))
            for n, (prefix, code) in enumerate(session_codes(rng, blocks, length)):
                clock += timedelta(seconds=rng.randint(5, 90), milliseconds=rng.randint(0, 999))
                hi = 22 if label == "HP" else 16
                words = rng.randint(3, hi)
                rec = {
                    "id": f"{user}-d{day + 1}-{n:03d}",
                    "ts": clock,
                    "role": ROLE[prefix],
                    "user": user,
                    "code": code,
                    "words": words,
                }
                turns_by_group[label].append(rec)
                plan.append(rec)

    for label, recs in turns_by_group.items():
        diff = WORD_TOTALS[label] - sum(r["words"] for r in recs)
        step = 1 if diff > 0 else -1
        i = 0
        while diff:
            rec = recs[i % len(recs)]
            if rec["words"] + step >= 1:
                rec["words"] += step
                diff -= step
            i += 1

    turns = [
        DialogueTurn(
            id=r["id"],
            timestamp=r["ts"],
            role=r["role"],
            user_id=r["user"],
            text=" ".join(rng.choice(WORDS) for _ in range(r["words"])),
            model_name="chat-model" if r["role"] == "chatbot" else "",
            da_code=r["code"],
        )
        for r in plan
    ]
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "fixture_transcripts.jsonl").write_text(write_transcript(turns), encoding="utf-8")
    (OUT / "fixture_labels.tsv").write_text("".join(f"{s}\t{lab}\n" for s, lab in labels), encoding="utf-8")


if __name__ == "__main__":
    main()
