"""Random small tracking scenes for oracle comparisons."""
from smotkit.geometry import BoundingBox


def random_scene(rng, max_frames=6, max_ids=3):
    """Ground truth and prediction as per-frame {id: (x, y, w, h)} lists.

    Predictions jitter ground-truth boxes, occasionally swap identities, drop
    boxes or add clutter, so IoUs spread over the whole alpha range.
    """
    n_frames = int(rng.integers(1, max_frames + 1))
    n_gt = int(rng.integers(1, max_ids + 1))
    base = {i: [float(v) for v in rng.uniform(0, 30, 2)] + [float(v) for v in rng.uniform(4, 12, 2)]
            for i in range(1, n_gt + 1)}
    gt, pred = [], []
    for _ in range(n_frames):
        g, p = {}, {}
        for i, (x, y, w, h) in base.items():
            x, y = x + rng.normal(0, 1), y + rng.normal(0, 1)
            if rng.random() < 0.85:
                g[i] = (x, y, w, h)
            if rng.random() < 0.8:
                pid = i if rng.random() < 0.8 else int(rng.integers(1, max_ids + 2))
                jitter = rng.normal(0, rng.choice([0.5, 2.0, 4.0]), 2)
                p[pid] = (x + jitter[0], y + jitter[1], w * rng.uniform(0.7, 1.3), h * rng.uniform(0.7, 1.3))
        if rng.random() < 0.2:
            p[int(rng.integers(10, 12))] = tuple(float(v) for v in rng.uniform(0, 30, 2)) + (5.0, 5.0)
        gt.append(g)
        pred.append(p)
    return gt, pred


def as_boxes(frames):
    return [{i: BoundingBox(*b) for i, b in f.items()} for f in frames]
