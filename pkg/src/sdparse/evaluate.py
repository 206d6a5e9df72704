"""Labeled and unlabeled F1 over edge sets, with length-bucket analysis.

An edge is unlabeled-correct when its (head, dependent) pair appears in
gold and labeled-correct when the label matches too; root edges count
like any other edge. Zero denominators yield zero statistics rather than
errors, so empty predictions score 0 instead of crashing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AlignmentError
from .sdp import SemanticGraph


@dataclass(frozen=True)
class F1Report:
    gold_edges: int
    predicted_edges: int
    correct_unlabeled: int
    correct_labeled: int
    sentences: int
    per_label: dict[str, tuple[int, int, int]] | None = field(default=None)

    def __post_init__(self):
        if self.correct_labeled > self.correct_unlabeled:
            raise AlignmentError("labeled matches exceed unlabeled matches")
        if self.correct_unlabeled > min(self.gold_edges, self.predicted_edges):
            raise AlignmentError("matches exceed edge counts")

    @staticmethod
    def _prf(correct: int, predicted: int, gold: int) -> tuple[float, float, float]:
        p = correct / predicted if predicted else 0.0
        r = correct / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return p, r, f

    @property
    def labeled_precision(self) -> float:
        return self._prf(self.correct_labeled, self.predicted_edges, self.gold_edges)[0]

    @property
    def labeled_recall(self) -> float:
        return self._prf(self.correct_labeled, self.predicted_edges, self.gold_edges)[1]

    @property
    def labeled_f1(self) -> float:
        return self._prf(self.correct_labeled, self.predicted_edges, self.gold_edges)[2]

    @property
    def unlabeled_precision(self) -> float:
        return self._prf(self.correct_unlabeled, self.predicted_edges, self.gold_edges)[0]

    @property
    def unlabeled_recall(self) -> float:
        return self._prf(self.correct_unlabeled, self.predicted_edges, self.gold_edges)[1]

    @property
    def unlabeled_f1(self) -> float:
        return self._prf(self.correct_unlabeled, self.predicted_edges, self.gold_edges)[2]


def _graphs(corpus) -> list[SemanticGraph]:
    out = []
    for item in corpus:
        out.append(item if isinstance(item, SemanticGraph) else item[1])
    return out


def lf1(predicted, gold, per_label: bool = False) -> F1Report:
    """Score aligned corpora (lists of graphs or (sentence, graph) pairs)."""
    pred_graphs = _graphs(predicted)
    gold_graphs = _graphs(gold)
    if len(pred_graphs) != len(gold_graphs):
        raise AlignmentError(
            f"corpora differ in size: {len(pred_graphs)} predicted vs "
            f"{len(gold_graphs)} gold sentences"
        )
    totals = dict(gold=0, predicted=0, unlabeled=0, labeled=0)
    label_counts: dict[str, list[int]] = {}
    for index, (p, g) in enumerate(zip(pred_graphs, gold_graphs)):
        if p.n != g.n:
            raise AlignmentError(
                f"sentence {index + 1}: predicted graph spans {p.n} tokens, gold {g.n}"
            )
        totals["gold"] += len(g.edges)
        totals["predicted"] += len(p.edges)
        totals["unlabeled"] += len(p.pairs & g.pairs)
        totals["labeled"] += len(p.edge_set & g.edge_set)
        if per_label:
            for e in g.edges:
                label_counts.setdefault(e.label, [0, 0, 0])[0] += 1
            for e in p.edges:
                label_counts.setdefault(e.label, [0, 0, 0])[1] += 1
            for e in p.edge_set & g.edge_set:
                label_counts.setdefault(e.label, [0, 0, 0])[2] += 1
    per = None
    if per_label:
        per = {name: tuple(counts) for name, counts in sorted(label_counts.items())}
    return F1Report(
        gold_edges=totals["gold"],
        predicted_edges=totals["predicted"],
        correct_unlabeled=totals["unlabeled"],
        correct_labeled=totals["labeled"],
        sentences=len(gold_graphs),
        per_label=per,
    )


def macro_average(reports) -> float:
    """Unweighted mean labeled F1 over reports (or raw values)."""
    values = [r.labeled_f1 if isinstance(r, F1Report) else float(r) for r in reports]
    if not values:
        raise AlignmentError("macro average of no reports")
    return sum(values) / len(values)


def length_buckets(predicted, gold, width: int = 10) -> list[tuple[tuple[int, int], F1Report]]:
    """Group sentences by token count into [1..w], [w+1..2w], ... buckets."""
    if width < 1:
        raise AlignmentError(f"bucket width must be positive, got {width}")
    pred_graphs = _graphs(predicted)
    gold_graphs = _graphs(gold)
    if len(pred_graphs) != len(gold_graphs):
        raise AlignmentError(
            f"corpora differ in size: {len(pred_graphs)} predicted vs "
            f"{len(gold_graphs)} gold sentences"
        )
    groups: dict[int, tuple[list[SemanticGraph], list[SemanticGraph]]] = {}
    for p, g in zip(pred_graphs, gold_graphs):
        bucket = (g.n - 1) // width
        groups.setdefault(bucket, ([], []))[0].append(p)
        groups[bucket][1].append(g)
    out = []
    for bucket in sorted(groups):
        lo, hi = bucket * width + 1, (bucket + 1) * width
        pred_group, gold_group = groups[bucket]
        out.append(((lo, hi), lf1(pred_group, gold_group)))
    return out


def report_text(report: F1Report) -> str:
    lines = [
        f"sentences        {report.sentences}",
        f"gold edges       {report.gold_edges}",
        f"predicted edges  {report.predicted_edges}",
        f"labeled    P {report.labeled_precision:.4f}  R {report.labeled_recall:.4f}"
        f"  F1 {report.labeled_f1:.4f}",
        f"unlabeled  P {report.unlabeled_precision:.4f}  R {report.unlabeled_recall:.4f}"
        f"  F1 {report.unlabeled_f1:.4f}",
    ]
    if report.per_label:
        lines.append("label\tgold\tpredicted\tcorrect")
        for name, (gold_n, pred_n, correct) in report.per_label.items():
            lines.append(f"{name}\t{gold_n}\t{pred_n}\t{correct}")
    return "\n".join(lines)


def report_tsv(report: F1Report) -> str:
    return "\t".join(
        [
            str(report.sentences),
            str(report.gold_edges),
            str(report.predicted_edges),
            str(report.correct_unlabeled),
            str(report.correct_labeled),
            f"{report.unlabeled_f1:.6f}",
            f"{report.labeled_f1:.6f}",
        ]
    )


def buckets_tsv(buckets: list[tuple[tuple[int, int], F1Report]]) -> str:
    lines = ["lo\thi\tsentences\tgold\tpredicted\tunlabeled_f1\tlabeled_f1"]
    for (lo, hi), report in buckets:
        lines.append(
            f"{lo}\t{hi}\t{report.sentences}\t{report.gold_edges}"
            f"\t{report.predicted_edges}\t{report.unlabeled_f1:.6f}"
            f"\t{report.labeled_f1:.6f}"
        )
    return "\n".join(lines)
