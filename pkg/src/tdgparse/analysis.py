"""Distributions of reference mentions across discourse content types.

Four tables describe where gold reference edges land, broken down by the
content type of the child's sentence: timex parents (DCT / meta / other
timex), event reference-timex parents (DCT / same sentence / cross
sentence), and two child-type-by-parent-type matrices for mention parents.
Cells are row percentages; a row with no qualifying children renders as "-".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import (
    CONTENT_TYPES,
    DCT,
    EVENT,
    EVENT_REF,
    META_NODES,
    ROOT,
    TIMEX,
    TIMEX_REF,
    Corpus,
    DpLabelMap,
    require_dp_coverage,
)

ROW_LABELS = tuple(ct.value for ct in CONTENT_TYPES)


@dataclass
class DistributionTable:
    name: str
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    cells: list[list[float]]  # row percentages; NaN row when denominator is 0
    denominators: list[int]

    def cell(self, row: str, col: str) -> float:
        return self.cells[self.row_labels.index(row)][self.col_labels.index(col)]

    def denominator(self, row: str) -> int:
        return self.denominators[self.row_labels.index(row)]


def _table(name: str, col_labels: tuple[str, ...],
           counts: dict[str, list[int]]) -> DistributionTable:
    cells: list[list[float]] = []
    denominators: list[int] = []
    for row in ROW_LABELS:
        row_counts = counts[row]
        denom = sum(row_counts)
        denominators.append(denom)
        if denom == 0:
            cells.append([math.nan] * len(col_labels))
        else:
            cells.append([100.0 * c / denom for c in row_counts])
    return DistributionTable(name=name, row_labels=ROW_LABELS,
                             col_labels=col_labels, cells=cells,
                             denominators=denominators)


def _empty_counts(n_cols: int) -> dict[str, list[int]]:
    return {row: [0] * n_cols for row in ROW_LABELS}


def timex_parent_distribution(corpus: Corpus, dp: DpLabelMap) -> DistributionTable:
    """Where timexes point: the DCT, the meta root, or another timex."""
    require_dp_coverage(dp, corpus)
    cols = ("DCT", "Meta", "OtherTimex")
    counts = _empty_counts(len(cols))
    for doc in corpus:
        for edge in doc.gold_edges:
            if edge.slot != TIMEX_REF or doc.mention(edge.child).kind != TIMEX:
                continue
            row = dp[(doc.id, doc.mention(edge.child).sentence)].value
            if edge.parent == DCT:
                counts[row][0] += 1
            elif edge.parent == ROOT:
                counts[row][1] += 1
            else:
                counts[row][2] += 1
    return _table("timex_parents", cols, counts)


def event_reftimex_distribution(corpus: Corpus, dp: DpLabelMap) -> DistributionTable:
    """Where events anchor in time: DCT, a same-sentence timex, or further."""
    require_dp_coverage(dp, corpus)
    cols = ("DCT", "IntraSentenceTimex", "CrossSentenceTimex")
    counts = _empty_counts(len(cols))
    for doc in corpus:
        for edge in doc.gold_edges:
            if edge.slot != TIMEX_REF or doc.mention(edge.child).kind != EVENT:
                continue
            child = doc.mention(edge.child)
            row = dp[(doc.id, child.sentence)].value
            if edge.parent == DCT:
                counts[row][0] += 1
            elif doc.mention(edge.parent).sentence == child.sentence:
                counts[row][1] += 1
            else:
                counts[row][2] += 1
    return _table("event_reference_timexes", cols, counts)


def event_reftimex_content_matrix(corpus: Corpus, dp: DpLabelMap) -> DistributionTable:
    """Content types of non-DCT reference timexes, by child content type."""
    require_dp_coverage(dp, corpus)
    counts = _empty_counts(len(ROW_LABELS))
    for doc in corpus:
        for edge in doc.gold_edges:
            if edge.slot != TIMEX_REF or doc.mention(edge.child).kind != EVENT:
                continue
            if edge.parent in META_NODES:
                continue
            row = dp[(doc.id, doc.mention(edge.child).sentence)].value
            col = dp[(doc.id, doc.mention(edge.parent).sentence)].value
            counts[row][ROW_LABELS.index(col)] += 1
    return _table("event_reference_timex_content", ROW_LABELS, counts)


def event_refevent_content_matrix(corpus: Corpus, dp: DpLabelMap) -> DistributionTable:
    """Content types of cross-sentence reference events, by child type."""
    require_dp_coverage(dp, corpus)
    counts = _empty_counts(len(ROW_LABELS))
    for doc in corpus:
        for edge in doc.gold_edges:
            if edge.slot != EVENT_REF or edge.parent in META_NODES:
                continue
            child = doc.mention(edge.child)
            parent = doc.mention(edge.parent)
            if parent.sentence == child.sentence:
                continue
            row = dp[(doc.id, child.sentence)].value
            col = dp[(doc.id, parent.sentence)].value
            counts[row][ROW_LABELS.index(col)] += 1
    return _table("event_reference_event_content", ROW_LABELS, counts)


def all_tables(corpus: Corpus, dp: DpLabelMap) -> list[DistributionTable]:
    return [
        timex_parent_distribution(corpus, dp),
        event_reftimex_distribution(corpus, dp),
        event_reftimex_content_matrix(corpus, dp),
        event_refevent_content_matrix(corpus, dp),
    ]


def _fmt(value: float) -> str:
    return "-" if math.isnan(value) else f"{value:.1f}"


def render_csv(table: DistributionTable) -> str:
    lines = ["content_type,n," + ",".join(table.col_labels)]
    for i, row in enumerate(table.row_labels):
        cells = ",".join(_fmt(v) for v in table.cells[i])
        lines.append(f"{row},{table.denominators[i]},{cells}")
    return "\n".join(lines) + "\n"


def render_text(table: DistributionTable) -> str:
    """Aligned fixed-width table, one content type per row."""
    headers = ["type", "n"] + list(table.col_labels)
    rows = [[row, str(table.denominators[i])]
            + [_fmt(v) for v in table.cells[i]]
            for i, row in enumerate(table.row_labels)]
    widths = [max(len(h), *(len(r[c]) for r in rows))
              for c, h in enumerate(headers)]
    out = [table.name]
    out.append("  ".join(h.rjust(widths[c]) for c, h in enumerate(headers)))
    for r in rows:
        out.append("  ".join(cell.rjust(widths[c]) for c, cell in enumerate(r)))
    return "\n".join(out) + "\n"


def summary_checks(timex_table: DistributionTable) -> list[dict]:
    """The two headline claims about timex anchoring, as pass/fail records.

    Historical (D1) sentences send most timexes to the meta root; every
    other content type anchors timexes on the DCT at least two thirds of
    the time. Rows without timexes are skipped.
    """
    checks: list[dict] = []
    d1_meta = timex_table.cell("D1", "Meta")
    checks.append({
        "check": "D1 timexes reference the meta root >= 60% of the time",
        "passed": bool(not math.isnan(d1_meta) and d1_meta >= 60.0),
        "value": None if math.isnan(d1_meta) else round(d1_meta, 1),
    })
    worst_row, worst = None, math.inf
    for row in timex_table.row_labels:
        if row == "D1" or timex_table.denominator(row) == 0:
            continue
        share = timex_table.cell(row, "DCT")
        if share < worst:
            worst_row, worst = row, share
    checks.append({
        "check": "non-D1 timexes reference the DCT >= 66% of the time",
        "passed": bool(worst_row is not None and worst >= 66.0),
        "value": None if worst_row is None else round(worst, 1),
        "worst_row": worst_row,
    })
    return checks
