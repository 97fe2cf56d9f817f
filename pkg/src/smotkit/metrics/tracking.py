"""HOTA, CLEAR MOT and identity metrics on box trajectories.

HOTA uses a separate bijective matching for every alpha in 0.05..0.95: among
pairs with IoU >= alpha it maximizes the number of matches, then the sum of
alignment-weighted IoU (the global alignment score times IoU).
Sequences combine by summing counts (association and localization scores are
weighted by true positives), so corpus aggregation is order independent.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..geometry import BoundingBox, iou

ALPHAS = np.arange(0.05, 0.99, 0.05)
EPS = np.finfo(float).eps
CLEAR_THRESHOLD = 0.5
IDENTITY_THRESHOLD = 0.5

Frames = Sequence[Mapping[int, BoundingBox]]


class FrameRangeError(ValueError):
    pass


@dataclass
class TrackingEvalResult:
    hota: float
    deta: float
    assa: float
    loca: float
    mota: float
    motp: float
    idf1: float
    idr: float
    idp: float
    idsw: int
    counts: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "hota": self.hota, "deta": self.deta, "assa": self.assa, "loca": self.loca,
            "mota": self.mota, "motp": self.motp, "idf1": self.idf1, "idr": self.idr,
            "idp": self.idp, "idsw": self.idsw,
        }


def to_frames(x) -> list[dict[int, BoundingBox]]:
    """Accept a TrackSet, an AnnotationFile or a per-frame list of {id: box}."""
    if hasattr(x, "boxes_by_frame"):
        return x.boxes_by_frame()
    return [dict(f) for f in x]


@dataclass
class _Sequence:
    gt_ids: list[np.ndarray]
    tr_ids: list[np.ndarray]
    sims: list[np.ndarray]
    gt_labels: list[int]
    tr_labels: list[int]


def _prepare(gt: Frames, pred: Frames) -> _Sequence:
    if len(gt) != len(pred):
        raise FrameRangeError(f"ground truth has {len(gt)} frames, prediction has {len(pred)}")
    gt_labels = sorted({i for f in gt for i in f})
    tr_labels = sorted({i for f in pred for i in f})
    gidx = {l: k for k, l in enumerate(gt_labels)}
    tidx = {l: k for k, l in enumerate(tr_labels)}
    gt_ids, tr_ids, sims = [], [], []
    for g, p in zip(gt, pred):
        gk = sorted(g)
        pk = sorted(p)
        gt_ids.append(np.array([gidx[i] for i in gk], dtype=int))
        tr_ids.append(np.array([tidx[i] for i in pk], dtype=int))
        sim = np.zeros((len(gk), len(pk)))
        for a, gi in enumerate(gk):
            for b, pi in enumerate(pk):
                sim[a, b] = iou(g[gi], p[pi])
        sims.append(sim)
    return _Sequence(gt_ids, tr_ids, sims, gt_labels, tr_labels)


def hota_counts(seq: _Sequence) -> dict:
    n_gt, n_tr = len(seq.gt_labels), len(seq.tr_labels)
    n_alpha = len(ALPHAS)
    tp = np.zeros(n_alpha)
    fn = np.zeros(n_alpha)
    fp = np.zeros(n_alpha)
    loc_sum = np.zeros(n_alpha)

    potential = np.zeros((n_gt, n_tr))
    gt_count = np.zeros((n_gt, 1))
    tr_count = np.zeros((1, n_tr))
    for g, p, sim in zip(seq.gt_ids, seq.tr_ids, seq.sims):
        denom = sim.sum(0)[np.newaxis, :] + sim.sum(1)[:, np.newaxis] - sim
        sim_iou = np.zeros_like(sim)
        ok = denom > EPS
        sim_iou[ok] = sim[ok] / denom[ok]
        potential[g[:, np.newaxis], p[np.newaxis, :]] += sim_iou
        gt_count[g] += 1
        tr_count[0, p] += 1
    alignment = potential / np.maximum(1, gt_count + tr_count - potential)

    matches = np.zeros((n_alpha, n_gt, n_tr))
    for g, p, sim in zip(seq.gt_ids, seq.tr_ids, seq.sims):
        if len(g) == 0:
            fp += len(p)
            continue
        if len(p) == 0:
            fn += len(g)
            continue
        weight = alignment[g[:, np.newaxis], p[np.newaxis, :]] * sim
        bonus = min(len(g), len(p)) + 1.0
        for a, alpha in enumerate(ALPHAS):
            # matches with S >= alpha first, then the largest alignment-weighted similarity
            ok = sim >= alpha - EPS
            rows, cols = linear_sum_assignment(-np.where(ok, bonus + weight, 0.0))
            keep = ok[rows, cols]
            r, c = rows[keep], cols[keep]
            n = len(r)
            tp[a] += n
            fn[a] += len(g) - n
            fp[a] += len(p) - n
            if n:
                loc_sum[a] += sim[r, c].sum()
                matches[a, g[r], p[c]] += 1

    assa = np.zeros(n_alpha)
    for a in range(n_alpha):
        m = matches[a]
        ass_iou = m / np.maximum(1, gt_count + tr_count - m)
        assa[a] = (m * ass_iou).sum() / max(1.0, tp[a])
    return {"tp": tp, "fn": fn, "fp": fp, "assa_weighted": assa * tp, "loc_sum": loc_sum}


def clear_counts(seq: _Sequence) -> dict:
    n_gt = len(seq.gt_labels)
    tp = fn = fp = idsw = 0
    motp_sum = 0.0
    prev_tracker = np.full(n_gt, np.nan)
    prev_step = np.full(n_gt, np.nan)
    for g, p, sim in zip(seq.gt_ids, seq.tr_ids, seq.sims):
        if len(g) == 0:
            fp += len(p)
            continue
        if len(p) == 0:
            fn += len(g)
            continue
        score = (p[np.newaxis, :] == prev_step[g[:, np.newaxis]]) * 1000.0 + sim
        score[sim < CLEAR_THRESHOLD - EPS] = 0
        rows, cols = linear_sum_assignment(-score)
        keep = score[rows, cols] > EPS
        rows, cols = rows[keep], cols[keep]
        mg, mt = g[rows], p[cols]
        before = prev_tracker[mg]
        idsw += int(np.sum(~np.isnan(before) & (mt != before)))
        prev_tracker[mg] = mt
        prev_step[:] = np.nan
        prev_step[mg] = mt
        n = len(mg)
        tp += n
        fn += len(g) - n
        fp += len(p) - n
        motp_sum += float(sim[rows, cols].sum())
    return {"tp": tp, "fn": fn, "fp": fp, "idsw": idsw, "motp_sum": motp_sum}


def identity_matching(seq: _Sequence) -> tuple[dict, list[tuple[int, int]]]:
    """Global min-cost identity correspondence; returns counts and matched label pairs."""
    n_gt, n_tr = len(seq.gt_labels), len(seq.tr_labels)
    potential = np.zeros((n_gt, n_tr))
    gt_count = np.zeros(n_gt)
    tr_count = np.zeros(n_tr)
    for g, p, sim in zip(seq.gt_ids, seq.tr_ids, seq.sims):
        matched = (sim >= IDENTITY_THRESHOLD - EPS).astype(float)
        potential[g[:, np.newaxis], p[np.newaxis, :]] += matched
        gt_count[g] += 1
        tr_count[p] += 1
    size = n_gt + n_tr
    fp_mat = np.zeros((size, size))
    fn_mat = np.zeros((size, size))
    fp_mat[n_gt:, :n_tr] = 1e10
    fn_mat[:n_gt, n_tr:] = 1e10
    for k in range(n_gt):
        fn_mat[k, :n_tr] = gt_count[k]
        fn_mat[k, n_tr + k] = gt_count[k]
    for k in range(n_tr):
        fp_mat[:n_gt, k] = tr_count[k]
        fp_mat[n_gt + k, k] = tr_count[k]
    fn_mat[:n_gt, :n_tr] -= potential
    fp_mat[:n_gt, :n_tr] -= potential
    if size:
        rows, cols = linear_sum_assignment(fn_mat + fp_mat)
    else:
        rows = cols = np.zeros(0, dtype=int)
    idfn = float(fn_mat[rows, cols].sum())
    idfp = float(fp_mat[rows, cols].sum())
    idtp = float(gt_count.sum()) - idfn
    pairs = [
        (seq.gt_labels[r], seq.tr_labels[c])
        for r, c in zip(rows, cols)
        if r < n_gt and c < n_tr and potential[r, c] > 0
    ]
    return {"idtp": idtp, "idfn": idfn, "idfp": idfp}, sorted(pairs)


def _finalize(counts: dict) -> TrackingEvalResult:
    h = counts["hota"]
    tp, fn, fp = h["tp"], h["fn"], h["fp"]
    deta = tp / np.maximum(1.0, tp + fn + fp)
    assa = h["assa_weighted"] / np.maximum(1.0, tp)
    loca = np.maximum(1e-10, h["loc_sum"]) / np.maximum(1e-10, tp)
    hota = np.sqrt(deta * assa)
    c = counts["clear"]
    mota = (c["tp"] - c["fp"] - c["idsw"]) / max(1.0, c["tp"] + c["fn"])
    motp = c["motp_sum"] / max(1.0, c["tp"])
    i = counts["identity"]
    idr = i["idtp"] / max(1.0, i["idtp"] + i["idfn"])
    idp = i["idtp"] / max(1.0, i["idtp"] + i["idfp"])
    idf1 = i["idtp"] / max(1.0, i["idtp"] + 0.5 * i["idfp"] + 0.5 * i["idfn"])
    return TrackingEvalResult(
        float(hota.mean()), float(deta.mean()), float(assa.mean()), float(loca.mean()),
        float(mota), float(motp), float(idf1), float(idr), float(idp), int(c["idsw"]), counts,
    )


def eval_tracking_with_matching(gt, pred) -> tuple[TrackingEvalResult, list[tuple[int, int]]]:
    seq = _prepare(to_frames(gt), to_frames(pred))
    ident, pairs = identity_matching(seq)
    counts = {"hota": hota_counts(seq), "clear": clear_counts(seq), "identity": ident}
    return _finalize(counts), pairs


def eval_tracking(gt, pred) -> TrackingEvalResult:
    """Tracking metrics for one video; ``gt`` and ``pred`` must cover the same frames."""
    return eval_tracking_with_matching(gt, pred)[0]


def combine_tracking(results: Sequence[TrackingEvalResult]) -> TrackingEvalResult:
    """Corpus-level metrics from per-video results (sum of counts)."""
    if not results:
        raise ValueError("no tracking results to combine")
    hota = {k: sum(r.counts["hota"][k] for r in results) for k in results[0].counts["hota"]}
    clear = {k: sum(r.counts["clear"][k] for r in results) for k in results[0].counts["clear"]}
    ident = {k: sum(r.counts["identity"][k] for r in results) for k in results[0].counts["identity"]}
    return _finalize({"hota": hota, "clear": clear, "identity": ident})
