"""Slow, independent reference implementations used only by the tests.

Nothing here imports library code that computes the quantity being checked.
"""
from __future__ import annotations

import math
from collections import Counter


# -- geometry -------------------------------------------------------------

def raster_iou(a, b):
    """IoU of integer boxes (x, y, w, h) by counting unit cells."""
    cells_a = {(x, y) for x in range(a[0], a[0] + a[2]) for y in range(a[1], a[1] + a[3])}
    cells_b = {(x, y) for x in range(b[0], b[0] + b[2]) for y in range(b[1], b[1] + b[3])}
    union = len(cells_a | cells_b)
    return len(cells_a & cells_b) / union if union else 0.0


def corner_iou(a, b):
    ax1, ay1, ax2, ay2 = a[0], a[1], a[0] + a[2], a[1] + a[3]
    bx1, by1, bx2, by2 = b[0], b[1], b[0] + b[2], b[1] + b[3]
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


# -- contours -------------------------------------------------------------

def contour_pixels(mask):
    """Mask pixels with a 4-neighbour outside the mask or outside the image."""
    h, w = len(mask), len(mask[0])
    out = set()
    for r in range(h):
        for c in range(w):
            if not mask[r][c]:
                continue
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                rr, cc = r + dr, c + dc
                if not (0 <= rr < h and 0 <= cc < w) or not mask[rr][cc]:
                    out.add((r, c))
                    break
    return out


def chebyshev_dilate(pixels, radius, h, w):
    out = set()
    for r in range(h):
        for c in range(w):
            if any(max(abs(r - pr), abs(c - pc)) <= radius for pr, pc in pixels):
                out.add((r, c))
    return out


# -- HOTA -----------------------------------------------------------------

ALPHAS = [0.05 * k for k in range(1, 20)]


def _best_matching(edges, n_rows):
    """Exhaustive search for the matching maximizing (size, total weight).

    ``edges`` maps row -> list of (col, weight).
    """
    best = (0, 0.0, ())

    def rec(row, used, size, total, chosen):
        nonlocal best
        if row == n_rows:
            if (size, total) > best[:2]:
                best = (size, total, tuple(chosen))
            return
        rec(row + 1, used, size, total, chosen)
        for col, wt in edges.get(row, []):
            if col not in used:
                used.add(col)
                chosen.append((row, col))
                rec(row + 1, used, size + 1, total + wt, chosen)
                chosen.pop()
                used.discard(col)

    rec(0, set(), 0, 0.0, [])
    return best[2]


def brute_force_hota(gt_frames, pred_frames):
    """HOTA, DetA, AssA, LocA averaged over the alpha grid.

    Frames are lists of {id: (x, y, w, h)}. Per alpha and frame, the matching
    is found by enumeration: most pairs with IoU >= alpha, then the largest
    sum of alignment * IoU, where alignment is the global soft-association
    score between the two identities.
    """
    gt_ids = sorted({i for f in gt_frames for i in f})
    pr_ids = sorted({i for f in pred_frames for i in f})
    sims = []
    for g, p in zip(gt_frames, pred_frames):
        sims.append({(gi, pi): corner_iou(g[gi], p[pi]) for gi in g for pi in p})

    gt_count = Counter(i for f in gt_frames for i in f)
    pr_count = Counter(i for f in pred_frames for i in f)
    potential = Counter()
    for g, p, s in zip(gt_frames, pred_frames, sims):
        for gi in g:
            for pi in p:
                if s[(gi, pi)] == 0:
                    continue
                row = sum(s[(gi, q)] for q in p)
                col = sum(s[(h, pi)] for h in g)
                potential[(gi, pi)] += s[(gi, pi)] / (row + col - s[(gi, pi)])
    align = {}
    for gi in gt_ids:
        for pi in pr_ids:
            pot = potential[(gi, pi)]
            align[(gi, pi)] = pot / max(1.0, gt_count[gi] + pr_count[pi] - pot)

    hota, deta, assa, loca = [], [], [], []
    for alpha in ALPHAS:
        tp = fn = fp = 0
        loc = 0.0
        matches = Counter()
        for g, p, s in zip(gt_frames, pred_frames, sims):
            rows = sorted(g)
            edges = {}
            for r, gi in enumerate(rows):
                for pi in sorted(p):
                    if s[(gi, pi)] >= alpha - 1e-12:
                        edges.setdefault(r, []).append((pi, align[(gi, pi)] * s[(gi, pi)]))
            chosen = _best_matching(edges, len(rows))
            tp += len(chosen)
            fn += len(g) - len(chosen)
            fp += len(p) - len(chosen)
            for r, pi in chosen:
                matches[(rows[r], pi)] += 1
                loc += s[(rows[r], pi)]
        da = tp / max(1, tp + fn + fp)
        aa = 0.0
        for (gi, pi), m in matches.items():
            aa += m * (m / (gt_count[gi] + pr_count[pi] - m))
        aa = aa / max(1, tp)
        deta.append(da)
        assa.append(aa)
        hota.append(math.sqrt(da * aa))
        loca.append(loc / tp if tp else 1.0)
    n = len(ALPHAS)
    return sum(hota) / n, sum(deta) / n, sum(assa) / n, sum(loca) / n


# -- CIDEr ----------------------------------------------------------------

def brute_force_cider(corpus):
    """corpus: list of (list of reference token lists, hypothesis token list).

    Straight from the definition: per n, TF-IDF vectors over all n-grams of
    the vocabulary, cosine between hypothesis and each reference, averaged
    over references and over n = 1..4.
    """
    big_n = len(corpus)

    def grams(tokens, n):
        return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]

    total = 0.0
    for refs, hyp in corpus:
        per_n = []
        for n in range(1, 5):
            vocab = set(grams(hyp, n))
            for rs, h in corpus:
                for r in rs:
                    vocab |= set(grams(r, n))
            vocab = sorted(vocab)

            def vec(tokens):
                gs = grams(tokens, n)
                out = []
                for word in vocab:
                    tf = gs.count(word) / len(gs) if gs else 0.0
                    df = sum(1 for rs, _ in corpus if any(word in grams(r, n) for r in rs))
                    out.append(tf * math.log(big_n / max(1.0, df)))
                return out

            hv = vec(hyp)
            sims = []
            for r in refs:
                rv = vec(r)
                nh = math.sqrt(sum(x * x for x in hv))
                nr = math.sqrt(sum(x * x for x in rv))
                sims.append(sum(x * y for x, y in zip(hv, rv)) / (nh * nr) if nh and nr else 0.0)
            per_n.append(sum(sims) / len(sims))
        total += sum(per_n) / 4
    return total / big_n
