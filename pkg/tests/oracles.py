"""Independent reference implementations used as test oracles.

Everything here is deliberately written with different mechanics than the
package: the decoder re-scans all unassigned slots every step and checks
acyclicity with a Floyd-Warshall transitive closure; the metrics counter
tallies flat slot tuples. Plain Python only, no numpy.
"""

from __future__ import annotations

import random

from tdgparse.corpus import Document, GoldEdge, Mention, Sentence
from tdgparse.graph import Slot, TemporalDependencyGraph, candidate_set, slot_instances

META = ("DCT", "ROOT", "NO_EVENT")


def _closure_has_cycle(ids: list[str], edges: list[tuple[str, str]]) -> bool:
    index = {m: i for i, m in enumerate(ids)}
    n = len(ids)
    reach = [[False] * n for _ in range(n)]
    for child, parent in edges:
        reach[index[child]][index[parent]] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                row_i, row_k = reach[i], reach[k]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return any(reach[i][i] for i in range(n))


def reference_decode(doc: Document, scores: dict, order: str = "score") -> dict:
    """Greedy cycle-free decoding, restated from scratch.

    Returns {(child_id, slot_name): parent}. Each step picks the unassigned
    slot with the highest top-candidate score (canonical slot order on ties),
    then assigns the best-scored candidate whose addition keeps the full edge
    set acyclic under a transitive-closure check.
    """
    ordered_mentions = sorted(doc.mentions,
                              key=lambda m: (m.sentence, m.start, m.end, m.id))
    slot_order: list[tuple[str, str]] = []
    for m in ordered_mentions:
        slot_order.append((m.id, "timex_ref"))
        if m.kind == "event":
            slot_order.append((m.id, "event_ref"))
    canon = {s: i for i, s in enumerate(slot_order)}
    ids = [m.id for m in doc.mentions]

    def top_score(key: tuple[str, str]) -> float:
        return max(scores[Slot(*key)].scores)

    unassigned = list(slot_order)
    chosen_edges: list[tuple[str, str]] = []
    result: dict[tuple[str, str], str] = {}
    while unassigned:
        if order == "score":
            key = min(unassigned, key=lambda s: (-top_score(s), canon[s]))
        else:
            key = min(unassigned, key=lambda s: canon[s])
        unassigned.remove(key)
        sc = scores[Slot(*key)]
        feasible = []
        for pos, (cand, value) in enumerate(zip(sc.candidates, sc.scores)):
            if cand in META or not _closure_has_cycle(
                    ids, chosen_edges + [(key[0], cand)]):
                feasible.append((value, -pos, cand))
        value, _negpos, cand = max(feasible)
        result[key] = cand
        if cand not in META:
            chosen_edges.append((key[0], cand))
    return result


def brute_force_metrics(preds: dict, corpus: list[Document]) -> dict:
    """Accuracy and partitioned P/R/F1 by flat tuple counting."""
    rows: list[tuple[str, str, bool]] = []  # (gold category, pred category, hit)
    for doc in corpus:
        sentence_of = {m.id: m.sentence for m in doc.mentions}

        def category(child: str, parent: str) -> str:
            if parent in META:
                return "no_parent"
            if sentence_of[parent] == sentence_of[child]:
                return "intra_sentence"
            return "cross_sentence"

        graph = preds[doc.id]
        for edge in doc.gold_edges:
            predicted = graph.edges[Slot(edge.child, edge.slot)]
            rows.append((category(edge.child, edge.parent),
                         category(edge.child, predicted),
                         predicted == edge.parent))
    total = len(rows)
    out = {
        "accuracy": sum(1 for _, _, hit in rows if hit) / total,
        "total_slots": total,
        "per_category": {},
    }
    for cat in ("intra_sentence", "cross_sentence", "no_parent"):
        gold_n = sum(1 for g, _, _ in rows if g == cat)
        pred_n = sum(1 for _, p, _ in rows if p == cat)
        correct = sum(1 for g, _, hit in rows if g == cat and hit)
        p = correct / pred_n if pred_n else 0.0
        r = correct / gold_n if gold_n else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        out["per_category"][cat] = {"gold": gold_n, "predicted": pred_n,
                                    "correct": correct, "p": p, "r": r, "f1": f1}
    return out


def random_document(rng: random.Random, max_mentions: int = 10,
                    doc_id: str = "fuzz") -> Document:
    """A random valid document with an acyclic random gold graph."""
    n_sents = rng.randint(1, 3)
    n_mentions = rng.randint(1, max_mentions)
    placements = sorted(rng.randint(0, n_sents - 1) for _ in range(n_mentions))
    per_sent: dict[int, int] = {}
    mentions = []
    n_t = n_e = 0
    for s in placements:
        pos = per_sent.get(s, 0)
        per_sent[s] = pos + 1
        if rng.random() < 0.45:
            n_t += 1
            mid, kind = f"t{n_t}", "timex"
        else:
            n_e += 1
            mid, kind = f"e{n_e}", "event"
        mentions.append(Mention(id=mid, kind=kind, sentence=s, start=pos,
                                end=pos + 1))
    sentences = [Sentence(index=s, tokens=tuple(
        f"w{s}-{i}" for i in range(max(per_sent.get(s, 0), 1))))
        for s in range(n_sents)]

    # random acyclic gold: parents always precede children in a hidden order
    shuffled = mentions[:]
    rng.shuffle(shuffled)
    rank = {m.id: i for i, m in enumerate(shuffled)}
    timexes = [m for m in mentions if m.kind == "timex"]
    events = [m for m in mentions if m.kind == "event"]
    edges = []
    for m in timexes:
        earlier = [t.id for t in timexes if rank[t.id] < rank[m.id]]
        parent = rng.choice(["DCT", "ROOT"] + earlier)
        edges.append(GoldEdge(child=m.id, slot="timex_ref", parent=parent))
    for m in events:
        parent = rng.choice(["DCT"] + [t.id for t in timexes])
        edges.append(GoldEdge(child=m.id, slot="timex_ref", parent=parent))
        earlier = [e.id for e in events if rank[e.id] < rank[m.id]]
        parent = rng.choice(["NO_EVENT"] + earlier)
        edges.append(GoldEdge(child=m.id, slot="event_ref", parent=parent))
    return Document(id=doc_id, dct="2021-06-15", sentences=sentences,
                    mentions=mentions, gold_edges=edges)


def random_scores(rng: random.Random, doc: Document) -> dict:
    """Random finite scores for every slot; sometimes coarsened to force ties."""
    from tdgparse.graph import ScoredCandidates

    out = {}
    coarse = rng.random() < 0.3
    for slot in slot_instances(doc):
        cands = candidate_set(doc, slot)
        values = [rng.uniform(-5, 5) for _ in cands]
        if coarse:
            values = [round(v) * 1.0 for v in values]
        out[slot] = ScoredCandidates(slot, cands, values)
    return out


def random_pred_graph(rng: random.Random, doc: Document) -> TemporalDependencyGraph:
    """A random legal (total, acyclic) prediction for one document."""
    ids = [m.id for m in doc.mentions]
    slots = slot_instances(doc)
    rng.shuffle(slots)
    edges: dict[Slot, str] = {}
    chosen: list[tuple[str, str]] = []
    for slot in slots:
        options = candidate_set(doc, slot)[:]
        rng.shuffle(options)
        for cand in options:
            if cand in META or not _closure_has_cycle(
                    ids, chosen + [(slot.child, cand)]):
                edges[slot] = cand
                if cand not in META:
                    chosen.append((slot.child, cand))
                break
    return TemporalDependencyGraph(doc_id=doc.id, edges=edges)
