from .labelspace import (
    LabelSpace,
    LabelSpaceError,
    LabelSpaceMapper,
    LabelSpaceName,
    build_label_space,
)
from .predicates import PREDICATE_SCHEMA, PredicateParseError, PredicateSet, extract_predicates
from .retrieval import (
    AlignmentRecord,
    CandidateList,
    GlossRetriever,
    Selector,
    Synset,
    align_interactions,
    align_predicates,
    cosine,
    gloss_similarity,
    interactions_from_records,
    retrieve_topk,
    select_synset,
)

__all__ = [
    "AlignmentRecord", "CandidateList", "GlossRetriever", "LabelSpace", "LabelSpaceError",
    "LabelSpaceMapper", "LabelSpaceName", "PREDICATE_SCHEMA", "PredicateParseError",
    "PredicateSet", "Selector", "Synset", "align_interactions", "align_predicates",
    "build_label_space", "cosine", "extract_predicates", "gloss_similarity",
    "interactions_from_records", "retrieve_topk", "select_synset",
]
