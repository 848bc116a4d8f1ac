"""Chunk-based precision/recall/F1 in the conlleval convention.

Chunks are maximal IOB spans; an orphan "I-x" (no preceding chunk of the
same concept) opens a new chunk, matching the reference scorer's leniency.
Rates are stored in [0, 1] and displayed scaled by 100 with two decimals.
"""

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Sentence, is_outside


class AlignmentError(Exception):
    pass


@dataclass(frozen=True, order=True)
class ChunkSpan:
    concept: str
    start: int
    end: int  # inclusive


@dataclass(frozen=True)
class ConceptScore:
    precision: float
    recall: float
    f1: float
    support: int  # gold chunk count
    predicted: int = 0
    correct: int = 0


@dataclass(frozen=True)
class EvalReport:
    per_concept: dict
    overall: ConceptScore
    token_accuracy: float
    n_tokens: int


@dataclass(frozen=True)
class RunStats:
    n_runs: int
    min_f1: float
    avg_f1: float
    best_f1: float
    per_run: tuple


def _prf(correct: int, predicted: int, gold: int) -> tuple:
    precision = correct / predicted if predicted else 0.0
    recall = correct / gold if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def extract_chunks(tags: Sequence[str]) -> list:
    """Maximal chunk spans of an IOB tag sequence, sorted by start."""
    chunks = []
    open_concept = None
    start = 0
    for i, tag in enumerate(tags):
        if is_outside(tag):
            concept, begins = None, False
        else:
            prefix, concept = tag[0], tag[2:]
            begins = prefix == "B" or concept != open_concept
        if open_concept is not None and (concept != open_concept or begins):
            chunks.append(ChunkSpan(open_concept, start, i - 1))
            open_concept = None
        if concept is not None and begins:
            open_concept, start = concept, i
    if open_concept is not None:
        chunks.append(ChunkSpan(open_concept, start, len(tags) - 1))
    return chunks


def _as_tags(item):
    return item.tags if isinstance(item, Sentence) else tuple(item)


def score(gold: Iterable, pred: Iterable) -> EvalReport:
    """Score predicted tag sequences against gold ones.

    A chunk counts as correct when concept, start and end all match.
    Raises AlignmentError naming the first sentence whose shape differs.
    """
    gold = [_as_tags(g) for g in gold]
    pred = [_as_tags(p) for p in pred]
    if len(gold) != len(pred):
        raise AlignmentError(f"{len(gold)} gold sentences vs {len(pred)} predicted")

    concepts = {}  # concept -> [correct, predicted, gold]
    correct_tokens = total_tokens = 0
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise AlignmentError(f"sentence {i}: {len(g)} gold tags vs {len(p)} predicted")
        g_chunks = set(extract_chunks(g))
        p_chunks = set(extract_chunks(p))
        for chunk in g_chunks:
            concepts.setdefault(chunk.concept, [0, 0, 0])[2] += 1
        for chunk in p_chunks:
            concepts.setdefault(chunk.concept, [0, 0, 0])[1] += 1
        for chunk in g_chunks & p_chunks:
            concepts[chunk.concept][0] += 1
        total_tokens += len(g)
        correct_tokens += sum(
            1 for a, b in zip(g, p) if a == b or (is_outside(a) and is_outside(b))
        )

    per_concept = {}
    for concept in sorted(concepts):
        correct, predicted, gold_n = concepts[concept]
        precision, recall, f1 = _prf(correct, predicted, gold_n)
        per_concept[concept] = ConceptScore(precision, recall, f1, gold_n, predicted, correct)

    totals = [sum(v[k] for v in concepts.values()) for k in range(3)]
    precision, recall, f1 = _prf(*totals)
    overall = ConceptScore(precision, recall, f1, totals[2], totals[1], totals[0])
    accuracy = correct_tokens / total_tokens if total_tokens else 0.0
    return EvalReport(per_concept=per_concept, overall=overall,
                      token_accuracy=accuracy, n_tokens=total_tokens)


def f1_pct(report: EvalReport) -> float:
    """Overall F1 on the displayed x100 scale."""
    return 100.0 * report.overall.f1


def format_report(report: EvalReport) -> str:
    """Aligned plain-text report, one line per concept plus the overall line."""
    o = report.overall
    lines = [
        "processed %d tokens with %d phrases; found: %d phrases; correct: %d."
        % (report.n_tokens, o.support, o.predicted, o.correct),
        "accuracy: %6.2f%%; precision: %6.2f%%; recall: %6.2f%%; FB1: %6.2f"
        % (100 * report.token_accuracy, 100 * o.precision, 100 * o.recall, 100 * o.f1),
    ]
    width = max((len(c) for c in report.per_concept), default=0)
    for concept, s in report.per_concept.items():
        lines.append(
            "%*s: precision: %6.2f%%; recall: %6.2f%%; FB1: %6.2f  %d"
            % (width, concept, 100 * s.precision, 100 * s.recall, 100 * s.f1, s.predicted)
        )
    return "\n".join(lines)


def aggregate_runs(per_run_f1: Sequence[float]) -> RunStats:
    """Collapse per-seed F1 scores into min/avg/best."""
    per_run = tuple(float(x) for x in per_run_f1)
    if not per_run:
        raise ValueError("aggregate_runs needs at least one run")
    return RunStats(
        n_runs=len(per_run),
        min_f1=min(per_run),
        avg_f1=sum(per_run) / len(per_run),
        best_f1=max(per_run),
        per_run=per_run,
    )


def runs_to_csv(rows: Sequence[tuple]) -> str:
    """CSV of per-run scores: columns model, dataset, seed, f1, aggregate.

    `rows` holds (model, dataset, RunStats) triples; per-run lines carry
    their seed index, the trailing aggregate line is flagged.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["model", "dataset", "seed", "f1", "aggregate"])
    for model, dataset, stats in rows:
        for seed, f1 in enumerate(stats.per_run):
            writer.writerow([model, dataset, seed, f"{f1:.2f}", ""])
        writer.writerow([model, dataset, "", f"{stats.avg_f1:.2f}", "avg"])
    return out.getvalue()
