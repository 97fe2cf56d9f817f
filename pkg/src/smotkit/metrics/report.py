"""Corpus evaluation and the JSONL metrics report.

A report has one ``metadata`` line (flags, metric parameters, reserved
fields), one ``video`` line per ground-truth video and one ``aggregate`` line.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..interactions.labelspace import LabelSpace
from ..interactions.retrieval import Selector, interactions_from_records
from ..io import SCHEMA_VERSION, AnnotationFile, dumps_jsonl
from .captions import METRIC_PARAMS, score_captions
from .interactions import InteractionEvalResult, combine_interactions, eval_interactions
from .tracking import ALPHAS, CLEAR_THRESHOLD, IDENTITY_THRESHOLD, combine_tracking, eval_tracking_with_matching

logger = logging.getLogger(__name__)

RESERVED_FIELDS = ("macro_f1", "head_tail", "semantic_proximity", "direction_accuracy")


def metric_params() -> dict:
    return {
        "tracking": {
            "hota_alphas": [round(float(a), 2) for a in ALPHAS],
            "clear_threshold": CLEAR_THRESHOLD,
            "identity_threshold": IDENTITY_THRESHOLD,
            "box_iou": "continuous coordinates",
        },
        "captions": METRIC_PARAMS,
        "interactions": {
            "averaging": "micro over ordered pairs and classes",
            "identity_match": "global min-cost identity matching",
            "zero_division": {"precision_without_predictions": 0.0,
                              "recall_without_ground_truth": "1 if no predictions else 0"},
        },
    }


@dataclass
class VideoEval:
    video_id: str
    tracking: object
    identity_match: list[tuple[int, int]]
    interactions: InteractionEvalResult
    caption_items: list[tuple[list[str], str]] = field(default_factory=list)
    summary_item: tuple[list[str], str] | None = None
    warnings: list[str] = field(default_factory=list)


def pred_interactions(ann: AnnotationFile, selector: Selector | str | None) -> dict:
    """Stored interactions, or the ones a selector derives from alignment records."""
    if selector is None or not ann.alignments:
        return ann.interaction_sets()
    return interactions_from_records(ann.alignments, selector)


def empty_prediction(gt: AnnotationFile) -> AnnotationFile:
    return AnnotationFile(gt.video_id, gt.num_frames, gt.frame_size, "missing")


def evaluate_video(gt: AnnotationFile, pred: AnnotationFile | None, space: LabelSpace | None = None,
                   selector: Selector | str | None = None) -> VideoEval:
    warnings = []
    if pred is None:
        msg = f"{gt.video_id}: no prediction; scored as all misses"
        logger.warning(msg)
        warnings.append(msg)
        pred = empty_prediction(gt)
    tracking, match = eval_tracking_with_matching(gt, pred)
    inter = eval_interactions(gt.interaction_sets(), pred_interactions(pred, selector), space, match)
    items = []
    missing = 0
    for g, p in match:
        if g in gt.captions:
            hyp = pred.captions.get(p, "")
            if hyp.strip():
                items.append(([gt.captions[g]], hyp))
            else:
                missing += 1
    if missing:
        warnings.append(f"{gt.video_id}: {missing} matched identities without a predicted caption")
    summary = None
    if gt.summary and pred.summary and pred.summary.strip():
        summary = ([gt.summary], pred.summary)
    return VideoEval(gt.video_id, tracking, match, inter, items, summary, warnings)


def _captions_block(items) -> dict | None:
    try:
        return {"n": len(items), **score_captions(items).to_dict()} if items else None
    except ValueError:
        return None


def evaluate_corpus(gt: Mapping[str, AnnotationFile], pred: Mapping[str, AnnotationFile],
                    space: LabelSpace | None = None, selector: Selector | str | None = None,
                    jobs: int = 1) -> tuple[list[VideoEval], dict]:
    """Per-video evaluations (sorted by video id) and corpus aggregates."""
    ids = sorted(gt)
    extra = sorted(set(pred) - set(gt))
    if extra:
        logger.warning("ignoring %d predicted videos without ground truth: %s", len(extra), extra[:5])

    def one(vid):
        return evaluate_video(gt[vid], pred.get(vid), space, selector)

    if jobs > 1 and len(ids) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            videos = list(pool.map(one, ids))
    else:
        videos = [one(v) for v in ids]
    if not videos:
        return [], {"num_videos": 0}
    captions = [it for v in videos for it in v.caption_items]
    summaries = [v.summary_item for v in videos if v.summary_item is not None]
    aggregate = {
        "num_videos": len(videos),
        "missing_predictions": [v for v in ids if v not in pred],
        "tracking": combine_tracking([v.tracking for v in videos]).to_dict(),
        "interactions": combine_interactions([v.interactions for v in videos]).to_dict(),
        "captions": _captions_block(captions),
        "summary": _captions_block(summaries),
    }
    return videos, aggregate


def report_records(videos: Sequence[VideoEval], aggregate: dict, flags: Mapping) -> list[dict]:
    reserved = {k: None for k in RESERVED_FIELDS}
    records = [{
        "type": "metadata", "schema_version": SCHEMA_VERSION, "flags": dict(flags),
        "metric_params": metric_params(), "reserved": sorted(RESERVED_FIELDS),
    }]
    for v in videos:
        records.append({
            "type": "video", "video_id": v.video_id,
            "tracking": v.tracking.to_dict(),
            "identity_match": [list(p) for p in v.identity_match],
            "interactions": v.interactions.to_dict(per_class=True),
            "captions": _captions_block(v.caption_items),
            "summary": _captions_block([v.summary_item] if v.summary_item else []),
            "warnings": v.warnings,
        })
    records.append({"type": "aggregate", **aggregate, **reserved})
    return records


def dumps_report(videos: Sequence[VideoEval], aggregate: dict, flags: Mapping) -> str:
    return dumps_jsonl(report_records(videos, aggregate, flags))
