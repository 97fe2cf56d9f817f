"""Exact-match interaction scoring and label distribution statistics."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..interactions.labelspace import LabelSpace, LabelSpaceName

logger = logging.getLogger(__name__)

Interactions = Mapping[tuple[int, int], Iterable[str]]


@dataclass
class InteractionEvalResult:
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0
    per_class: dict[str, tuple[int, int, int]] = field(default_factory=dict)

    def to_dict(self, per_class: bool = False) -> dict:
        out = {"precision": self.precision, "recall": self.recall, "f1": self.f1,
               "tp": self.tp, "fp": self.fp, "fn": self.fn}
        if per_class:
            out["per_class"] = {k: list(v) for k, v in sorted(self.per_class.items())}
        return out


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision 0 without predictions; recall 1 only when there is nothing to find
    and nothing was predicted; F1 0 unless both are positive."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    if tp + fn:
        recall = tp / (tp + fn)
    else:
        recall = 1.0 if tp + fp == 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _result(per_class: Mapping[str, list[int]]) -> InteractionEvalResult:
    tp = sum(v[0] for v in per_class.values())
    fp = sum(v[1] for v in per_class.values())
    fn = sum(v[2] for v in per_class.values())
    p, r, f = prf(tp, fp, fn)
    return InteractionEvalResult(p, r, f, tp, fp, fn, {k: tuple(v) for k, v in per_class.items()})


def eval_interactions(gt: Interactions, pred: Interactions, space: LabelSpace | None = None,
                      identity_match: Mapping[int, int] | Iterable[tuple[int, int]] | None = None
                      ) -> InteractionEvalResult:
    """Micro-averaged exact-match scores over ordered pairs and classes.

    ``identity_match`` maps predicted ids to ground-truth ids (a dict, or
    ``(gt_id, pred_id)`` pairs as produced by the identity matching). Pairs
    whose ids are unmatched count entirely as false positives. Without a
    match, ids are compared as-is. Both sides go through ``space``; only the
    ``frequent`` space drops labels outside its class set.
    """
    if identity_match is None:
        ids = {i for pair in pred for i in pair}
        pred_to_gt = {i: i for i in ids}
    elif isinstance(identity_match, Mapping):
        pred_to_gt = dict(identity_match)
    else:
        pred_to_gt = {p: g for g, p in identity_match}

    def mapped(labels):
        labels = frozenset(labels)
        if space is None:
            return labels
        if space.name is LabelSpaceName.FREQUENT:
            return space.map_set(labels)
        # out-of-vocabulary labels stay as they are so they still count as errors
        return frozenset(space.map_label(l) or l for l in labels)

    gt_sets = {pair: mapped(v) for pair, v in gt.items()}
    per_class: dict[str, list[int]] = {}
    matched_gt: dict[tuple[int, int], set[str]] = {}
    for (pi, pj), labels in sorted(pred.items()):
        labels = mapped(labels)
        if pi in pred_to_gt and pj in pred_to_gt:
            gpair = (pred_to_gt[pi], pred_to_gt[pj])
            truth = gt_sets.get(gpair, frozenset())
        else:
            if labels:
                logger.warning("pair (%s, %s) has unmatched identities; counted as false positives", pi, pj)
            gpair, truth = None, frozenset()
        for label in labels:
            counts = per_class.setdefault(label, [0, 0, 0])
            if label in truth:
                counts[0] += 1
                matched_gt.setdefault(gpair, set()).add(label)
            else:
                counts[1] += 1
    for pair, truth in gt_sets.items():
        for label in truth - matched_gt.get(pair, set()):
            per_class.setdefault(label, [0, 0, 0])[2] += 1
    return _result(per_class)


def combine_interactions(results: Iterable[InteractionEvalResult]) -> InteractionEvalResult:
    per_class: dict[str, list[int]] = {}
    for res in results:
        for label, (tp, fp, fn) in res.per_class.items():
            acc = per_class.setdefault(label, [0, 0, 0])
            acc[0] += tp
            acc[1] += fp
            acc[2] += fn
    return _result(per_class)


@dataclass
class InteractionStats:
    ranking: list[tuple[str, int]]
    total: int
    top1_share: float
    top30_share: float

    def to_dict(self) -> dict:
        return {
            "total": self.total, "top1_share": self.top1_share, "top30_share": self.top30_share,
            "ranking": [[label, count] for label, count in self.ranking],
        }


def interaction_stats(corpus: Iterable[Interactions], top: int = 30) -> InteractionStats:
    """Occurrences of each label over every ordered pair of every video."""
    counts: Counter = Counter()
    for interactions in corpus:
        for labels in interactions.values():
            counts.update(set(labels))
    ranking = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    total = sum(counts.values())
    if total == 0:
        return InteractionStats([], 0, 0.0, 0.0)
    return InteractionStats(
        ranking, total, ranking[0][1] / total, sum(c for _, c in ranking[:top]) / total,
    )
