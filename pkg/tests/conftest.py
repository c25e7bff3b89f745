import json

import pytest

from tdgparse.corpus import (
    ContentType,
    document_from_json,
    normalize_no_event_edges,
    validate_document,
)


def make_doc(obj: dict, validate: bool = True):
    """Build a normalized Document from plain JSON-shaped data."""
    doc = normalize_no_event_edges(document_from_json(obj))
    if validate:
        violations = validate_document(doc)
        assert not violations, violations
    return doc


# A three-document corpus small enough to tally every table by hand:
#   doc a: M1 sentence (quake) + C2 sentence (response); cross-sentence
#          event and timex references back into the M1 sentence.
#   doc b: two D1 sentences; the timex anchors to ROOT, one event to the DCT.
#   doc c: one NA sentence; the event_ref edge is omitted on purpose to
#          exercise NO_EVENT normalization.
HAND_DOCS = [
    {
        "id": "a",
        "dct": "2021-03-01",
        "sentences": [
            {"index": 0, "tokens": ["quake", "hit", "monday"]},
            {"index": 1, "tokens": ["crews", "responded", "tuesday"]},
        ],
        "mentions": [
            {"id": "e1", "kind": "event", "sentence": 0, "start": 1, "end": 2},
            {"id": "t1", "kind": "timex", "sentence": 0, "start": 2, "end": 3},
            {"id": "e2", "kind": "event", "sentence": 1, "start": 1, "end": 2},
            {"id": "t2", "kind": "timex", "sentence": 1, "start": 2, "end": 3},
        ],
        "edges": [
            {"child": "t1", "slot": "timex_ref", "parent": "DCT"},
            {"child": "t2", "slot": "timex_ref", "parent": "t1", "label": "after"},
            {"child": "e1", "slot": "timex_ref", "parent": "t1", "label": "overlap"},
            {"child": "e1", "slot": "event_ref", "parent": "NO_EVENT"},
            {"child": "e2", "slot": "timex_ref", "parent": "t1"},
            {"child": "e2", "slot": "event_ref", "parent": "e1", "label": "after"},
        ],
    },
    {
        "id": "b",
        "dct": "2021-03-02",
        "sentences": [
            {"index": 0, "tokens": ["in-1990", "war", "began"]},
            {"index": 1, "tokens": ["aftermath", "lingered"]},
        ],
        "mentions": [
            {"id": "t3", "kind": "timex", "sentence": 0, "start": 0, "end": 1},
            {"id": "e3", "kind": "event", "sentence": 0, "start": 2, "end": 3},
            {"id": "e4", "kind": "event", "sentence": 1, "start": 1, "end": 2},
        ],
        "edges": [
            {"child": "t3", "slot": "timex_ref", "parent": "ROOT"},
            {"child": "e3", "slot": "timex_ref", "parent": "t3"},
            {"child": "e3", "slot": "event_ref", "parent": "NO_EVENT"},
            {"child": "e4", "slot": "timex_ref", "parent": "DCT"},
            {"child": "e4", "slot": "event_ref", "parent": "e3"},
        ],
    },
    {
        "id": "c",
        "dct": "2021-03-03",
        "sentences": [
            {"index": 0, "tokens": ["today", "meeting", "held"]},
        ],
        "mentions": [
            {"id": "t4", "kind": "timex", "sentence": 0, "start": 0, "end": 1},
            {"id": "e5", "kind": "event", "sentence": 0, "start": 2, "end": 3},
        ],
        "edges": [
            {"child": "t4", "slot": "timex_ref", "parent": "DCT"},
            {"child": "e5", "slot": "timex_ref", "parent": "t4"},
        ],
    },
]

HAND_DP_ROWS = [
    ("a", 0, "M1"),
    ("a", 1, "C2"),
    ("b", 0, "D1"),
    ("b", 1, "D1"),
    ("c", 0, "NA"),
]


@pytest.fixture
def hand_corpus():
    return [make_doc(obj) for obj in HAND_DOCS]


@pytest.fixture
def hand_dp_labels():
    return {(doc, idx): ContentType(tag) for doc, idx, tag in HAND_DP_ROWS}


@pytest.fixture
def hand_corpus_path(tmp_path):
    path = tmp_path / "hand.jsonl"
    path.write_text("".join(json.dumps(obj) + "\n" for obj in HAND_DOCS),
                    encoding="utf-8")
    return path


@pytest.fixture
def hand_dp_path(tmp_path):
    path = tmp_path / "hand.tsv"
    path.write_text("".join(f"{d}\t{i}\t{t}\n" for d, i, t in HAND_DP_ROWS),
                    encoding="utf-8")
    return path
