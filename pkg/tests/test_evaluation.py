import random

import pytest

from tdgparse.evaluation import (
    CategoryMetrics,
    EvaluationError,
    MetricsReport,
    aggregate_seeds,
    aggregate_to_json,
    attachment_accuracy,
    corpus_identity,
    partitioned_prf,
    report_to_json,
    slot_category,
)
from tdgparse.graph import Slot, TemporalDependencyGraph, gold_graph

from .conftest import make_doc
from .oracles import brute_force_metrics, random_document, random_pred_graph


def three_timex_doc(gold=("DCT", "t1", "t1")):
    g1, g2, g3 = gold
    return make_doc({
        "id": "m1", "dct": "2021-01-01",
        "sentences": [{"index": 0, "tokens": ["a", "b"]},
                      {"index": 1, "tokens": ["c"]}],
        "mentions": [
            {"id": "t1", "kind": "timex", "sentence": 0, "start": 0, "end": 1},
            {"id": "t2", "kind": "timex", "sentence": 0, "start": 1, "end": 2},
            {"id": "t3", "kind": "timex", "sentence": 1, "start": 0, "end": 1},
        ],
        "edges": [
            {"child": "t1", "slot": "timex_ref", "parent": g1},
            {"child": "t2", "slot": "timex_ref", "parent": g2},
            {"child": "t3", "slot": "timex_ref", "parent": g3},
        ],
    })


def graph_for(doc, parents):
    return TemporalDependencyGraph(doc.id, {
        Slot(child, "timex_ref"): parent for child, parent in parents.items()
    })


def test_slot_category():
    doc = three_timex_doc()
    assert slot_category(doc, "t1", "DCT") == "no_parent"
    assert slot_category(doc, "t1", "ROOT") == "no_parent"
    assert slot_category(doc, "t2", "t1") == "intra_sentence"
    assert slot_category(doc, "t3", "t1") == "cross_sentence"
    with pytest.raises(EvaluationError, match="unknown parent"):
        slot_category(doc, "t1", "t9")


def test_accuracy_identity(hand_corpus):
    preds = {doc.id: gold_graph(doc) for doc in hand_corpus}
    assert attachment_accuracy(preds, hand_corpus) == 1.0


def test_accuracy_counts_exact_matches():
    doc = make_doc({
        "id": "m2", "dct": "2021-01-01",
        "sentences": [{"index": 0, "tokens": ["a", "b", "c"]}],
        "mentions": [
            {"id": "t1", "kind": "timex", "sentence": 0, "start": 0, "end": 1},
            {"id": "t2", "kind": "timex", "sentence": 0, "start": 1, "end": 2},
            {"id": "e1", "kind": "event", "sentence": 0, "start": 2, "end": 3},
        ],
        "edges": [
            {"child": "t1", "slot": "timex_ref", "parent": "DCT"},
            {"child": "t2", "slot": "timex_ref", "parent": "t1"},
            {"child": "e1", "slot": "timex_ref", "parent": "t1"},
        ],
    })
    pred = TemporalDependencyGraph(doc.id, {
        Slot("t1", "timex_ref"): "DCT",       # hit
        Slot("t2", "timex_ref"): "ROOT",      # miss
        Slot("e1", "timex_ref"): "t2",        # miss
        Slot("e1", "event_ref"): "NO_EVENT",  # hit (normalized gold)
    })
    assert attachment_accuracy({doc.id: pred}, [doc]) == 0.5


def test_wrong_meta_parent_scores_zero():
    doc = make_doc({
        "id": "m3", "dct": "2021-01-01",
        "sentences": [{"index": 0, "tokens": ["a"]}],
        "mentions": [{"id": "t1", "kind": "timex", "sentence": 0,
                      "start": 0, "end": 1}],
        "edges": [{"child": "t1", "slot": "timex_ref", "parent": "DCT"}],
    })
    preds = {doc.id: graph_for(doc, {"t1": "ROOT"})}
    assert attachment_accuracy(preds, [doc]) == 0.0
    report = partitioned_prf(preds, [doc])
    no_parent = report.per_category["no_parent"]
    assert (no_parent.gold, no_parent.predicted, no_parent.correct) == (1, 1, 0)
    assert no_parent.f1 == 0.0
    # the other two categories are empty on both sides
    assert sorted(report.flags) == [
        "cross_sentence:precision_undefined",
        "cross_sentence:recall_undefined",
        "intra_sentence:precision_undefined",
        "intra_sentence:recall_undefined",
    ]


def test_partitioned_three_timex_fixture():
    doc = three_timex_doc()
    preds = {doc.id: graph_for(doc, {"t1": "t3", "t2": "t1", "t3": "DCT"})}
    report = partitioned_prf(preds, [doc], seed=0)
    assert report.accuracy == pytest.approx(1 / 3)
    assert report.total_slots == 3
    intra = report.per_category["intra_sentence"]
    assert (intra.precision, intra.recall, intra.f1) == (1.0, 1.0, 1.0)
    cross = report.per_category["cross_sentence"]
    assert (cross.gold, cross.predicted, cross.correct) == (1, 1, 0)
    assert (cross.precision, cross.recall, cross.f1) == (0.0, 0.0, 0.0)
    nop = report.per_category["no_parent"]
    assert (nop.gold, nop.predicted, nop.correct) == (1, 1, 0)
    assert report.flags == []

    obj = report_to_json(report)
    assert obj["accuracy"] == 33.33
    assert obj["per_category"]["intra_sentence"]["f1"] == 100.0
    assert obj["per_category"]["cross_sentence"]["p"] == 0.0
    assert obj["seed"] == 0


def test_undefined_denominators_are_flagged():
    doc = three_timex_doc(gold=("DCT", "DCT", "DCT"))
    preds = {doc.id: graph_for(doc, {"t1": "DCT", "t2": "t1", "t3": "t1"})}
    report = partitioned_prf(preds, [doc])
    assert sorted(report.flags) == [
        "cross_sentence:recall_undefined",
        "intra_sentence:recall_undefined",
    ]
    assert report.per_category["intra_sentence"].recall == 0.0
    assert report.per_category["no_parent"].precision == 1.0
    assert report.per_category["no_parent"].recall == pytest.approx(1 / 3)

    swapped = partitioned_prf({doc.id: graph_for(
        doc, {"t1": "DCT", "t2": "DCT", "t3": "DCT"})}, [doc])
    assert "intra_sentence:precision_undefined" in swapped.flags


def test_predictions_must_cover_the_corpus():
    doc = three_timex_doc()
    with pytest.raises(EvaluationError, match="no prediction"):
        attachment_accuracy({}, [doc])
    partial = graph_for(doc, {"t1": "DCT", "t2": "t1"})
    with pytest.raises(EvaluationError, match="missing prediction"):
        attachment_accuracy({doc.id: partial}, [doc])


def fake_report(accuracy, corpus="deadbeef", seed=0):
    cats = {c: CategoryMetrics(gold=10, predicted=10, correct=int(10 * accuracy),
                               precision=accuracy, recall=accuracy, f1=accuracy)
            for c in ("intra_sentence", "cross_sentence", "no_parent")}
    return MetricsReport(corpus=corpus, seed=seed, accuracy=accuracy,
                         total_slots=30, per_category=cats)


def test_aggregate_mean_and_sample_std():
    reports = [fake_report(a, seed=i) for i, a in enumerate((0.7, 0.8, 0.9))]
    agg = aggregate_seeds(reports)
    assert agg["accuracy"]["mean"] == pytest.approx(0.8)
    assert agg["accuracy"]["std"] == pytest.approx(0.1)
    assert agg["seeds"] == [0, 1, 2]
    assert agg["n_reports"] == 3
    assert agg["per_category"]["intra_sentence"]["f1"]["mean"] == pytest.approx(0.8)

    reordered = aggregate_seeds(list(reversed(reports)))
    assert reordered["accuracy"]["mean"] == pytest.approx(agg["accuracy"]["mean"])
    assert reordered["accuracy"]["std"] == pytest.approx(agg["accuracy"]["std"])

    single = aggregate_seeds([fake_report(0.75)])
    assert single["accuracy"] == {"mean": 0.75, "std": 0.0}

    rendered = aggregate_to_json(agg)
    assert rendered["accuracy"] == {"mean": 80.0, "std": 10.0}
    assert rendered["per_category"]["no_parent"]["gold"] == 10


def test_aggregate_rejects_mismatched_corpora():
    with pytest.raises(EvaluationError, match="different corpora"):
        aggregate_seeds([fake_report(0.5, corpus="aaa"),
                         fake_report(0.6, corpus="bbb")])
    with pytest.raises(EvaluationError, match="nothing"):
        aggregate_seeds([])


def test_corpus_identity_tracks_doc_ids(hand_corpus):
    assert corpus_identity(hand_corpus) == corpus_identity(list(hand_corpus))
    assert corpus_identity(hand_corpus) != corpus_identity(hand_corpus[:2])


def test_matches_flat_recount_on_random_fixtures():
    rng = random.Random(3)
    for trial in range(20):
        corpus = [random_document(rng, max_mentions=8, doc_id=f"d{i}")
                  for i in range(3)]
        preds = {doc.id: random_pred_graph(rng, doc) for doc in corpus}
        want = brute_force_metrics(preds, corpus)
        report = partitioned_prf(preds, corpus)
        assert report.accuracy == pytest.approx(want["accuracy"])
        assert report.total_slots == want["total_slots"]
        for cat, w in want["per_category"].items():
            got = report.per_category[cat]
            assert (got.gold, got.predicted, got.correct) == \
                (w["gold"], w["predicted"], w["correct"])
            assert got.precision == pytest.approx(w["p"])
            assert got.recall == pytest.approx(w["r"])
            assert got.f1 == pytest.approx(w["f1"])
