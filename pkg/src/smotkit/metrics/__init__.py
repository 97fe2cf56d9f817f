from .captions import METRIC_PARAMS, CaptionEvalResult, eval_caption, score_captions, tokenize
from .interactions import (
    InteractionEvalResult,
    InteractionStats,
    combine_interactions,
    eval_interactions,
    interaction_stats,
    prf,
)
from .report import dumps_report, evaluate_corpus, evaluate_video
from .tracking import (
    ALPHAS,
    FrameRangeError,
    TrackingEvalResult,
    combine_tracking,
    eval_tracking,
    eval_tracking_with_matching,
)

__all__ = [
    "ALPHAS", "METRIC_PARAMS", "CaptionEvalResult", "FrameRangeError", "InteractionEvalResult",
    "InteractionStats", "TrackingEvalResult", "combine_interactions", "combine_tracking",
    "dumps_report", "eval_caption", "eval_interactions", "eval_tracking",
    "eval_tracking_with_matching", "evaluate_corpus", "evaluate_video", "interaction_stats", "prf",
    "score_captions", "tokenize",
]
