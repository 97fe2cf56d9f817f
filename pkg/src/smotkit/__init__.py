"""Training-free semantic multi-object tracking: tracks, grounded captions,
interaction labels and their evaluation."""
from .captioning import SemanticAnnotation, SemanticAnnotator, annotate_video
from .config import TrackerConfig
from .geometry import BoundingBox, Detection, InstanceMask, iou, mask_tight_box
from .grounding import ContourGrounder, GroundingMode, extract_contour, render_grounded_clip, thicken_contour
from .interactions import (
    GlossRetriever,
    LabelSpaceMapper,
    Selector,
    Synset,
    build_label_space,
    extract_predicates,
    retrieve_topk,
)
from .metrics import eval_caption, eval_interactions, eval_tracking, interaction_stats
from .tracking import PersonTracker, StageError, Track, TrackSet, gate_new_identity, step_tracker

__version__ = "0.1.0"

__all__ = [
    "BoundingBox", "ContourGrounder", "Detection", "GlossRetriever", "GroundingMode",
    "InstanceMask", "LabelSpaceMapper", "PersonTracker", "Selector", "SemanticAnnotation",
    "SemanticAnnotator", "StageError", "Synset", "Track", "TrackSet", "TrackerConfig",
    "annotate_video", "build_label_space", "eval_caption", "eval_interactions", "eval_tracking",
    "extract_contour", "extract_predicates", "gate_new_identity", "interaction_stats", "iou",
    "mask_tight_box", "render_grounded_clip", "retrieve_topk", "step_tracker", "thicken_contour",
]
