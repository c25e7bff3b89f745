"""Candidate reference sets and greedy cycle-free graph decoding.

Every mention contributes slots: each mention a reference-timex slot, each
event additionally a reference-event slot. A scorer assigns one score per
candidate per slot; decoding fills slots one at a time, always taking the
highest-ranked candidate that keeps the growing graph acyclic. Meta parents
(DCT, ROOT, NO_EVENT) can never close a cycle, so decoding is total.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import (
    DCT,
    EVENT,
    EVENT_REF,
    META_NODES,
    NO_EVENT,
    ROOT,
    TIMEX,
    TIMEX_REF,
    Document,
    Mention,
)


class GraphError(Exception):
    """A decoded or supplied graph violates a structural invariant."""


@dataclass(frozen=True)
class Slot:
    """One reference decision: the child mention and which slot is being filled."""

    child: str
    slot: str


@dataclass
class ScoredCandidates:
    """Scores for every candidate of one slot, sorted once for decoding.

    ranked() yields candidates by descending score; equal scores keep their
    candidate_set order, so ranking is deterministic given the score vector.
    """

    slot: Slot
    candidates: list[str]
    scores: list[float]
    _ranked: list[tuple[str, float]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.candidates) != len(self.scores):
            raise GraphError(
                f"slot {self.slot}: {len(self.candidates)} candidates but "
                f"{len(self.scores)} scores"
            )
        if len(set(self.candidates)) != len(self.candidates):
            raise GraphError(f"slot {self.slot}: duplicate candidates")
        pairs = list(zip(self.candidates, self.scores))
        self._ranked = sorted(pairs, key=lambda cs: -cs[1])

    def ranked(self) -> list[tuple[str, float]]:
        return self._ranked

    def top_score(self) -> float:
        return self._ranked[0][1]


@dataclass
class TemporalDependencyGraph:
    """A full assignment of parents to slots for one document."""

    doc_id: str
    edges: dict[Slot, str]

    def parent(self, child: str, slot: str) -> str:
        return self.edges[Slot(child, slot)]


def slot_instances(doc: Document) -> list[Slot]:
    """All slots of a document in canonical order.

    Children follow document order; for an event the reference-timex slot
    precedes the reference-event slot.
    """
    slots: list[Slot] = []
    for m in doc.ordered_mentions():
        slots.append(Slot(m.id, TIMEX_REF))
        if m.kind == EVENT:
            slots.append(Slot(m.id, EVENT_REF))
    return slots


def candidate_set(doc: Document, slot: Slot) -> list[str]:
    """Legal parents for a slot, meta nodes first, mentions in document order.

    - timex reference-timex: DCT, ROOT, then every other timex;
    - event reference-timex: DCT, then every timex;
    - event reference-event: NO_EVENT, then every other event.
    """
    child = doc.mention(slot.child)
    if slot.slot == TIMEX_REF:
        if child.kind == TIMEX:
            return [DCT, ROOT] + [t.id for t in doc.timexes() if t.id != child.id]
        return [DCT] + [t.id for t in doc.timexes()]
    if child.kind != EVENT:
        raise GraphError(f"timex {child.id} has no reference-event slot")
    return [NO_EVENT] + [e.id for e in doc.events() if e.id != child.id]


def would_create_cycle(child: str, parent: str, edges: dict[Slot, str],
                       doc: Document) -> bool:
    """True iff adding child -> parent closes a directed cycle.

    Existing edges point child -> parent; a new edge cycles exactly when the
    child is already reachable from the proposed parent. Meta parents have no
    outgoing reference slots and therefore never cycle.
    """
    if parent in META_NODES:
        return False
    if parent == child:
        return True
    out: dict[str, list[str]] = {}
    for s, p in edges.items():
        if p not in META_NODES:
            out.setdefault(s.child, []).append(p)
    frontier = [parent]
    seen = {parent}
    while frontier:
        node = frontier.pop()
        for nxt in out.get(node, ()):
            if nxt == child:
                return True
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return False


def _check_scores(doc: Document, scores: dict[Slot, ScoredCandidates]) -> list[Slot]:
    slots = slot_instances(doc)
    missing = [s for s in slots if s not in scores]
    if missing:
        raise GraphError(
            f"document {doc.id}: no scores for slots {missing[:3]}"
            + ("..." if len(missing) > 3 else "")
        )
    extra = set(scores) - set(slots)
    if extra:
        raise GraphError(f"document {doc.id}: scores for unknown slots {sorted(extra, key=str)[:3]}")
    for slot in slots:
        expected = candidate_set(doc, slot)
        got = scores[slot].candidates
        if got != expected:
            raise GraphError(
                f"document {doc.id}, slot {slot}: candidates {got} "
                f"do not match the candidate set {expected}"
            )
    return slots


def greedy_decode(doc: Document, scores: dict[Slot, ScoredCandidates],
                  order: str = "score") -> TemporalDependencyGraph:
    """Fill every slot with its best cycle-free candidate, one slot at a time.

    order="score" visits slots by descending top-candidate score (stable, so
    ties keep canonical order); order="document" visits them in canonical
    order. Each slot takes the first candidate in rank order that does not
    close a cycle with the edges chosen so far; a meta candidate is always
    available, so decoding cannot fail.
    """
    if order not in ("score", "document"):
        raise GraphError(f"unknown decode order {order!r}")
    slots = _check_scores(doc, scores)
    if order == "score":
        slots = sorted(slots, key=lambda s: -scores[s].top_score())
    edges: dict[Slot, str] = {}
    for slot in slots:
        for cand, _score in scores[slot].ranked():
            if not would_create_cycle(slot.child, cand, edges, doc):
                edges[slot] = cand
                break
        else:  # pragma: no cover - meta candidate is always cycle-free
            raise GraphError(f"document {doc.id}: no feasible candidate for {slot}")
    return TemporalDependencyGraph(doc_id=doc.id, edges=edges)


def gold_graph(doc: Document) -> TemporalDependencyGraph:
    """The gold assignment as a graph (requires a validated document)."""
    edges: dict[Slot, str] = {}
    for e in doc.gold_edges:
        edges[Slot(e.child, e.slot)] = e.parent
    graph = TemporalDependencyGraph(doc_id=doc.id, edges=edges)
    violations = validate_graph(graph, doc)
    if violations:
        raise GraphError(f"document {doc.id}: gold edges invalid: {violations[0]}")
    return graph


def validate_graph(graph: TemporalDependencyGraph, doc: Document) -> list[str]:
    """Check totality, candidate legality, and acyclicity of a full graph."""
    violations: list[str] = []
    slots = slot_instances(doc)
    for slot in slots:
        if slot not in graph.edges:
            violations.append(f"slot {slot} is unfilled")
    for slot, parent in graph.edges.items():
        if slot not in slots:
            violations.append(f"slot {slot} does not belong to document {doc.id}")
            continue
        legal = candidate_set(doc, slot)
        if parent not in legal:
            violations.append(f"slot {slot}: parent {parent} is not a legal candidate")
    out: dict[str, list[str]] = {}
    for slot, parent in graph.edges.items():
        if parent not in META_NODES:
            out.setdefault(slot.child, []).append(parent)

    def reaches_back(start: str) -> bool:
        stack = [start]
        seen = {start}
        while stack:
            node = stack.pop()
            for nxt in out.get(node, ()):
                if nxt == start:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    for m in doc.mentions:
        if reaches_back(m.id):
            violations.append(f"mention {m.id} lies on a cycle")
            break
    return violations


def graph_to_json(graph: TemporalDependencyGraph, doc: Document) -> dict:
    """Serialize a decoded graph with edges in canonical slot order."""
    edges = [{"child": s.child, "slot": s.slot, "parent": graph.edges[s]}
             for s in slot_instances(doc) if s in graph.edges]
    return {"id": graph.doc_id, "edges": edges}


def graph_from_json(obj: dict, doc: Document) -> TemporalDependencyGraph:
    edges: dict[Slot, str] = {}
    for e in obj["edges"]:
        slot = Slot(str(e["child"]), str(e["slot"]))
        if slot in edges:
            raise GraphError(f"document {doc.id}: duplicate edge for {slot}")
        edges[slot] = str(e["parent"])
    graph = TemporalDependencyGraph(doc_id=str(obj["id"]), edges=edges)
    violations = validate_graph(graph, doc)
    if violations:
        raise GraphError(f"document {doc.id}: {violations[0]}")
    return graph
