"""Command line entry points.

Exit codes: 0 success, 2 usage or configuration error, 3 bad input data,
4 backend failure, 5 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .backends import BackendConfigError, BackendError, parse_backend_spec
from .backends.fixtures import load_scenario
from .captioning import AnnotationError, annotate_video, generate_instance_caption
from .config import TrackerConfig
from .grounding import GroundingMode, render_grounded_clip
from .interactions import LabelSpaceError, LabelSpaceName, Selector, build_label_space
from .io import (
    AnnotationFile,
    EmptyVideoError,
    FormatError,
    TrackRecord,
    annotation_from_tracks,
    atomic_write_text,
    dumps_jsonl,
    load_annotation,
    load_annotation_dir,
    load_cluster_file,
    load_label_list,
    load_synsets,
    load_video,
    save_annotation,
    save_video,
)
from .metrics.captions import score_captions
from .metrics.interactions import interaction_stats
from .metrics.report import dumps_report, evaluate_corpus
from .metrics.tracking import FrameRangeError
from .tracking import PersonTracker, StageError

logger = logging.getLogger("smotkit")

EXIT_USAGE, EXIT_DATA, EXIT_BACKEND, EXIT_INTERNAL = 2, 3, 4, 5


class UsageError(Exception):
    pass


def _selector(value: str) -> Selector:
    try:
        return Selector(value.replace("-", "_"))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown selector {value!r} (choose llm, top1-cosine, top5-cosine)") from None


def _label_space_name(value: str) -> LabelSpaceName:
    try:
        return LabelSpaceName(value.replace("-", "_"))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown label space {value!r} (choose full, lemma-merged, frequent, clustered)") from None


def _grounding_mode(value: str) -> GroundingMode:
    try:
        return GroundingMode(value.replace("-", "_"))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown grounding mode {value!r} (choose single-contour, multi-contour, single-box)") from None


def _load_config(path: str | None) -> TrackerConfig:
    if path is None:
        return TrackerConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return TrackerConfig.from_dict(data.get("tracker", data))
    except (OSError, json.JSONDecodeError, ValueError, TypeError) as exc:
        raise UsageError(f"bad config file {path}: {exc}") from exc


def _flags(args: argparse.Namespace, skip=("output", "func", "verbose")) -> dict:
    """Command flags echoed into output metadata (output paths left out so reruns match)."""
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, (Selector, LabelSpaceName, GroundingMode)):
            value = value.value
        elif isinstance(value, list):
            value = [v.value if hasattr(v, "value") else v for v in value]
        out[key] = value
    return out


def _label_space(name: LabelSpaceName | None, args):
    """The LabelSpace for ``name`` (None means raw labels)."""
    if name is None or name is LabelSpaceName.FULL:
        return None
    if not args.synsets:
        raise UsageError(f"label space {name.value} needs --synsets")
    synsets = load_synsets(args.synsets)
    aux = None
    if name is LabelSpaceName.FREQUENT:
        if not args.frequent:
            raise UsageError("label space frequent needs --frequent FILE (one label per line)")
        aux = load_label_list(args.frequent)
    elif name is LabelSpaceName.CLUSTERED:
        if not args.clusters:
            raise UsageError("label space clustered needs --clusters FILE (label<TAB>cluster per line)")
        aux = load_cluster_file(args.clusters)
    return build_label_space(name, synsets, aux)


def _video_id(args) -> str:
    return args.video_id or Path(args.video).resolve().name


# -- commands -----------------------------------------------------------------

def cmd_track(args) -> int:
    cfg = _load_config(args.config)
    frames = load_video(args.video)
    suite = parse_backend_spec(args.backend)
    suite.require("detector", "mask_tracker")
    tracker = PersonTracker(suite.detector, suite.mask_tracker,
                            cfg.confidence_threshold, cfg.tau_new)
    tracks = tracker.fit_predict(frames)
    ann = annotation_from_tracks(tracks, _video_id(args), suite.provenance,
                                 include_masks=not args.no_masks,
                                 metadata={"command": "track", "flags": _flags(args),
                                           "config": cfg.to_dict()})
    save_annotation(ann, args.output)
    logger.info("wrote %d tracks to %s", len(tracks), args.output)
    return 0


def cmd_annotate(args) -> int:
    cfg = _load_config(args.config)
    frames = load_video(args.video)
    base = load_annotation(args.tracks)
    tracks = base.to_trackset()
    if tracks.num_frames != len(frames):
        raise FormatError(f"{args.tracks} covers {tracks.num_frames} frames, video has {len(frames)}")
    space = _label_space(args.label_space, args)
    synsets = load_synsets(args.synsets) if args.synsets else ()
    suite = parse_backend_spec(args.backend, record=args.record)
    suite.require("vlm", "llm", "embedder")
    sem = annotate_video(frames, tracks, suite, cfg, synsets, args.selector,
                         args.grounding_mode, args.stride, args.jobs)
    interactions = sem.interactions
    if space is not None:
        interactions = {pair: space.map_set(v) for pair, v in interactions.items()}
        interactions = {pair: v for pair, v in interactions.items() if v}
    metadata = {"command": "annotate", "flags": _flags(args, skip=("output", "func", "verbose", "record")),
                "config": cfg.to_dict(), "tracks_provenance": base.provenance}
    ann = AnnotationFile(base.video_id, base.num_frames, base.frame_size, suite.provenance,
                         base.tracks, sem.summary, dict(sem.captions),
                         {pair: sorted(v) for pair, v in interactions.items()},
                         list(sem.alignments), metadata)
    save_annotation(ann, args.output)
    return 0


def cmd_eval(args) -> int:
    gt = load_annotation_dir(args.gt)
    pred = load_annotation_dir(args.pred)
    space = _label_space(args.label_space, args)
    videos, aggregate = evaluate_corpus(gt, pred, space, args.selector, args.jobs)
    atomic_write_text(args.output, dumps_report(videos, aggregate, {"command": "eval", **_flags(args)}))
    if not args.quiet and videos:
        t, i = aggregate["tracking"], aggregate["interactions"]
        print(f"videos={aggregate['num_videos']} HOTA={t['hota']:.4f} MOTA={t['mota']:.4f} "
              f"IDF1={t['idf1']:.4f} IDSW={t['idsw']} interactions P={i['precision']:.4f} "
              f"R={i['recall']:.4f} F1={i['f1']:.4f}")
    return 0


def cmd_stats(args) -> int:
    gt = load_annotation_dir(args.gt)
    stats = interaction_stats(ann.interaction_sets() for _, ann in sorted(gt.items()))
    records = [{"type": "metadata", "command": "stats", "flags": _flags(args), "num_videos": len(gt)},
               {"type": "stats", **stats.to_dict()}]
    atomic_write_text(args.output, dumps_jsonl(records))
    if not args.quiet:
        for label, count in stats.ranking[:args.top]:
            print(f"{label}\t{count}")
    return 0


def _grounding_cells(args, gt, pred, cfg) -> list[dict]:
    if not args.videos or not args.backend:
        raise UsageError("--grounding-modes needs --videos DIR and --backend SPEC")
    suite = parse_backend_spec(args.backend)
    suite.require("vlm")
    cells = []
    for mode in args.grounding_modes:
        items = []
        for vid in sorted(gt):
            if vid not in pred:
                continue
            frames = load_video(Path(args.videos) / vid)
            tracks = pred[vid].to_trackset()
            match = evaluate_corpus({vid: gt[vid]}, {vid: pred[vid]})[0][0].identity_match
            for g, p in match:
                if g not in gt[vid].captions or p not in tracks:
                    continue
                clip = render_grounded_clip(frames, tracks, p, mode, cfg)
                hyp = generate_instance_caption(clip, suite.vlm, args.stride)
                if hyp.strip():
                    items.append(([gt[vid].captions[g]], hyp))
        scores = score_captions(items).to_dict() if items else None
        cells.append({"type": "cell", "ablation": "grounding", "grounding_mode": mode.value,
                      "n": len(items), "captions": scores})
    return cells


def cmd_ablate(args) -> int:
    pred = load_annotation_dir(args.pred)
    gt = load_annotation_dir(args.gt)
    # resolve every label space before scoring so a missing file fails early
    spaces = [(name, _label_space(name, args)) for name in args.label_spaces]
    cells = []
    for name, space in spaces:
        for selector in args.selectors:
            _, aggregate = evaluate_corpus(gt, pred, space, selector, args.jobs)
            cells.append({"type": "cell", "ablation": "interactions", "label_space": name.value,
                          "selector": selector.value,
                          "interactions": aggregate.get("interactions")})
    if args.grounding_modes:
        cells.extend(_grounding_cells(args, gt, pred, _load_config(args.config)))
    records = [{"type": "metadata", "command": "ablate", "flags": _flags(args)}, *cells]
    atomic_write_text(args.output, dumps_jsonl(records))
    if not args.quiet:
        for c in cells:
            if c["ablation"] == "interactions" and c["interactions"]:
                i = c["interactions"]
                print(f"{c['label_space']:<13} {c['selector']:<12} P={i['precision']:.4f} "
                      f"R={i['recall']:.4f} F1={i['f1']:.4f}")
            elif c["ablation"] == "grounding" and c["captions"]:
                s = c["captions"]
                print(f"{c['grounding_mode']:<15} BLEU={s['bleu']:.4f} METEOR={s['meteor']:.4f} "
                      f"ROUGE-L={s['rouge_l']:.4f} CIDEr={s['cider']:.4f}")
    return 0


def cmd_synth(args) -> int:
    """Materialize a fixture scenario as frames plus a ground-truth annotation."""
    scenario = load_scenario(args.scenario)
    out = Path(args.output)
    save_video(scenario.frames(), out / "frames")
    records = []
    for actor in sorted(scenario.actors, key=lambda a: a.id):
        boxes = {}
        for t in range(scenario.num_frames):
            box = actor.box_at(t, scenario.width, scenario.height)
            if box is not None:
                boxes[t] = box.as_tuple()
        if boxes:
            records.append(TrackRecord(actor.id, min(boxes), boxes))
    truth = scenario.ground_truth
    interactions = {}
    for rec in truth.get("interactions", []):
        interactions[(int(rec["subject"]), int(rec["object"]))] = list(rec["labels"])
    ann = AnnotationFile(args.video_id or Path(args.scenario).stem, scenario.num_frames,
                         (scenario.height, scenario.width), "scenario", records,
                         truth.get("summary"),
                         {int(k): v for k, v in truth.get("captions", {}).items()},
                         interactions)
    save_annotation(ann, out / "gt" / f"{ann.video_id}.jsonl")
    return 0


# -- parser -------------------------------------------------------------------

def _add_label_flags(p, multi: bool = False):
    p.add_argument("--synsets", help="label vocabulary (TSV id, lemma, gloss or JSONL)")
    p.add_argument("--frequent", help="frequent-label list, one label per line")
    p.add_argument("--clusters", help="label<TAB>cluster assignment file")
    if multi:
        p.add_argument("--label-spaces", type=_label_space_name, nargs="+",
                       default=list(LabelSpaceName), metavar="SPACE")
        p.add_argument("--selectors", type=_selector, nargs="+", default=list(Selector), metavar="SELECTOR")
    else:
        p.add_argument("--label-space", type=_label_space_name, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smotkit", description="Semantic multi-object tracking toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="track people in a frame directory")
    p.add_argument("video", help="directory of numbered frames")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--backend", required=True, help="fixture:<suite.json> or remote:<suite.json>")
    p.add_argument("--config", help="JSON tracker config")
    p.add_argument("--video-id")
    p.add_argument("--no-masks", action="store_true", help="store boxes only")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("annotate", help="summary, captions and interactions for tracked video")
    p.add_argument("video")
    p.add_argument("tracks", help="annotation file written by track")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--backend", required=True, help="fixture:|remote:|replay:<path>")
    p.add_argument("--record", help="append backend transcripts to this JSONL file")
    p.add_argument("--config")
    p.add_argument("--selector", type=_selector, default=Selector.LLM)
    p.add_argument("--grounding-mode", type=_grounding_mode, default=GroundingMode.SINGLE_CONTOUR)
    p.add_argument("--stride", type=int, default=1, help="frame subsampling for backend payloads")
    p.add_argument("--jobs", type=int, default=1)
    _add_label_flags(p)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("eval", help="score predicted annotations against ground truth")
    p.add_argument("gt")
    p.add_argument("pred")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--selector", type=_selector, default=None,
                   help="re-derive interactions from alignment records with this selector")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-q", "--quiet", action="store_true")
    _add_label_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="interaction label distribution of a corpus")
    p.add_argument("gt")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--top", type=int, default=30)
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("ablate", help="label space x selector grid and grounding-mode ablations")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--grounding-modes", type=_grounding_mode, nargs="*", default=[])
    p.add_argument("--videos", help="directory with one frame directory per video id")
    p.add_argument("--backend")
    p.add_argument("--config")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("-q", "--quiet", action="store_true")
    _add_label_flags(p, multi=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="write a fixture scenario as frames and ground truth")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--video-id")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "stride", 1) < 1 or getattr(args, "jobs", 1) < 1:
            raise UsageError("--stride and --jobs must be positive")
        return args.func(args)
    except (UsageError, BackendConfigError, EmptyVideoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, LabelSpaceError, FrameRangeError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (StageError, AnnotationError, BackendError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
