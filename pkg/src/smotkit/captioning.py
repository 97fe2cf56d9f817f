"""Video summary and per-identity captions from a video-language backend."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_positive_int, check_video
from .backends.base import BackendRequest, BackendSuite, MediaPayload, complete_text
from .config import TrackerConfig
from .grounding import GroundedClip, GroundingMode, render_grounded_clip
from .interactions.predicates import PredicateSet, extract_predicates
from .interactions.retrieval import (
    AlignmentRecord,
    GlossRetriever,
    Selector,
    Synset,
    align_predicates,
    interactions_from_records,
)
from .prompts import load_template
from .tracking import StageError, TrackSet

logger = logging.getLogger(__name__)


class AnnotationError(RuntimeError):
    """One or more annotation stages failed."""

    def __init__(self, errors: Sequence[StageError]):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


@dataclass
class SemanticAnnotation:
    summary: str = ""
    captions: dict[int, str] = field(default_factory=dict)
    interactions: dict[tuple[int, int], frozenset[str]] = field(default_factory=dict)
    alignments: list[AlignmentRecord] = field(default_factory=list)
    predicates: PredicateSet = field(default_factory=PredicateSet)

    def validate(self, identities=None) -> None:
        if identities is not None:
            extra = set(self.captions) - set(identities)
            if extra:
                raise ValueError(f"captions for identities not in the track set: {sorted(extra)}")
        for i, j in self.interactions:
            if i == j:
                raise ValueError(f"self interaction on identity {i}")


def first_line(text: str) -> str:
    for line in text.splitlines():
        line = line.strip()
        if line:
            return line
    return ""


def _subsample(frames: Sequence[np.ndarray], stride: int) -> tuple[np.ndarray, ...]:
    return tuple(frames[::check_positive_int(stride, "stride")])


def summary_request(video: Sequence[np.ndarray], stride: int = 1) -> BackendRequest:
    media = MediaPayload(_subsample(video, stride), {"kind": "summary"})
    return BackendRequest("vlm", load_template("summary").render(), media=media)


def caption_request(clip: GroundedClip, stride: int = 1) -> BackendRequest:
    prompt = load_template("instance_caption").render({"{color}": clip.target_color})
    tags = {"kind": "instance_caption", "target": clip.target_identity, "mode": clip.mode.value}
    return BackendRequest("vlm", prompt, media=MediaPayload(_subsample(clip.frames, stride), tags))


def generate_summary(video: Sequence[np.ndarray], vlm, stride: int = 1) -> str:
    """One-sentence description of the raw video."""
    frames = check_video(video)
    try:
        text = first_line(complete_text(vlm, summary_request(frames, stride)))
    except Exception as exc:
        raise StageError("summary", str(exc), cause=exc) from exc
    if not text:
        raise StageError("summary", "backend returned an empty summary")
    return text


def generate_instance_caption(clip: GroundedClip, vlm, stride: int = 1) -> str:
    """One-sentence description of the identity outlined in ``clip``."""
    try:
        text = first_line(complete_text(vlm, caption_request(clip, stride)))
    except Exception as exc:
        raise StageError("caption", str(exc), identities=[clip.target_identity], cause=exc) from exc
    if not text:
        raise StageError("caption", "backend returned an empty caption", identities=[clip.target_identity])
    return text


def annotate_video(video: Sequence[np.ndarray], tracks: TrackSet, backends: BackendSuite,
                   cfg: TrackerConfig | None = None, synsets: Sequence[Synset] | GlossRetriever = (),
                   selector: Selector | str = Selector.LLM,
                   grounding_mode: GroundingMode | str = GroundingMode.SINGLE_CONTOUR,
                   stride: int = 1, n_jobs: int = 1) -> SemanticAnnotation:
    """Summary, per-identity captions and aligned interactions for one video.

    The summary sees only raw frames and each caption only its grounded clip.
    Stage failures are collected and raised together as AnnotationError.
    """
    cfg = cfg or TrackerConfig()
    frames = check_video(video)
    if tracks.num_frames and tracks.num_frames != len(frames):
        raise ValueError(f"tracks cover {tracks.num_frames} frames, video has {len(frames)}")
    errors: list[StageError] = []
    ann = SemanticAnnotation()

    try:
        ann.summary = generate_summary(frames, backends.vlm, stride)
    except StageError as exc:
        errors.append(exc)

    def caption_one(identity: int):
        clip = render_grounded_clip(frames, tracks, identity, grounding_mode, cfg)
        return generate_instance_caption(clip, backends.vlm, stride)

    identities = tracks.identities
    if n_jobs > 1 and len(identities) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(caption_one, i) for i in identities]
            results = []
            for f in futures:
                try:
                    results.append(f.result())
                except StageError as exc:
                    results.append(exc)
    else:
        results = []
        for i in identities:
            try:
                results.append(caption_one(i))
            except StageError as exc:
                results.append(exc)
    for identity, res in zip(identities, results):
        if isinstance(res, StageError):
            errors.append(res)
        else:
            ann.captions[identity] = res

    if len(ann.captions) >= 2 and synsets:
        try:
            ann.predicates = extract_predicates(ann.captions, backends.llm)
        except Exception as exc:
            errors.append(StageError("predicates", str(exc), identities=sorted(ann.captions), cause=exc))
        if ann.predicates.by_pair:
            retriever = (synsets if isinstance(synsets, GlossRetriever)
                         else GlossRetriever(backends.embedder, cfg.top_k).fit(synsets))
            ann.alignments = align_predicates(ann.predicates, retriever, ann.captions,
                                              backends.llm, selector, n_jobs)
            ann.interactions = interactions_from_records(ann.alignments, selector)

    if errors:
        raise AnnotationError(errors)
    ann.validate(identities)
    return ann


class SemanticAnnotator(BaseEstimator):
    """Estimator wrapper: ``fit`` embeds the synset vocabulary, ``predict`` annotates a video."""

    def __init__(self, backends: BackendSuite | None = None, selector: str = "llm",
                 grounding_mode: str = "single_contour", contour_width: int = 5, top_k: int = 5,
                 stride: int = 1, n_jobs: int = 1):
        self.backends = backends
        self.selector = selector
        self.grounding_mode = grounding_mode
        self.contour_width = contour_width
        self.top_k = top_k
        self.stride = stride
        self.n_jobs = n_jobs

    def fit(self, synsets: Sequence[Synset], y=None):
        self.retriever_ = GlossRetriever(self.backends.embedder, self.top_k).fit(synsets)
        return self

    def predict(self, video: Sequence[np.ndarray], tracks: TrackSet) -> SemanticAnnotation:
        cfg = TrackerConfig(contour_width=self.contour_width, top_k=self.top_k)
        return annotate_video(video, tracks, self.backends, cfg, self.retriever_, self.selector,
                              self.grounding_mode, self.stride, self.n_jobs)
