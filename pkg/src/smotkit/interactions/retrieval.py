"""Gloss-embedding retrieval of synset candidates and LLM sense selection."""
from __future__ import annotations

import enum
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ..backends.base import BackendRequest, complete_text, embed_texts
from ..prompts import load_template
from .predicates import PredicateSet, loads_json_object

logger = logging.getLogger(__name__)

SYNSET_ID = re.compile(r"^(?P<lemma>.+)\.(?P<pos>[nvasr])\.(?P<sense>\d+)$")


class Selector(str, enum.Enum):
    LLM = "llm"
    TOP1_COSINE = "top1_cosine"
    TOP5_COSINE = "top5_cosine"


@dataclass(frozen=True)
class Synset:
    """A WordNet sense ``lemma.pos.nn`` with its gloss.

    Labels that are not WordNet ids are kept as pseudo-synsets: the whole
    label is the lemma and ``pos``/``sense`` are ``None``.
    """

    id: str
    gloss: str
    lemma: str = ""
    pos: str | None = None
    sense: int | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("synset id must be non-empty")
        if not self.gloss.strip():
            raise ValueError(f"synset {self.id} has an empty gloss")
        m = SYNSET_ID.match(self.id)
        if m:
            object.__setattr__(self, "lemma", self.lemma or m["lemma"])
            object.__setattr__(self, "pos", m["pos"])
            object.__setattr__(self, "sense", int(m["sense"]))
        elif not self.lemma:
            object.__setattr__(self, "lemma", self.id)

    @property
    def is_pseudo(self) -> bool:
        return self.pos is None

    @classmethod
    def pseudo(cls, label: str) -> "Synset":
        return cls(label, label.replace("_", " "))


@dataclass(frozen=True)
class CandidateList:
    predicate: str
    candidates: tuple[tuple[Synset, float], ...]

    def __post_init__(self):
        scores = [s for _, s in self.candidates]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("candidate scores must be non-increasing")

    @property
    def ids(self) -> list[str]:
        return [s.id for s, _ in self.candidates]

    def __len__(self) -> int:
        return len(self.candidates)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0 (with a warning) if either vector has zero norm."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"embedding dimensions differ: {u.shape} vs {v.shape}")
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        logger.warning("zero-norm embedding in cosine similarity; scoring 0")
        return 0.0
    return float(min(1.0, max(-1.0, float(np.dot(u, v)) / (nu * nv))))


def gloss_similarity(predicate: str, synset: Synset, emb) -> float:
    vecs = embed_texts(emb, [predicate, synset.gloss])
    return cosine(vecs[0], vecs[1])


def rank_candidates(scores: Iterable[tuple[Synset, float]], k: int) -> list[tuple[Synset, float]]:
    """Highest scores first, ties broken by synset id."""
    return sorted(scores, key=lambda item: (-item[1], item[0].id))[:k]


class GlossRetriever(BaseEstimator):
    """Top-K synset retrieval by cosine similarity between predicate and gloss embeddings.

    ``fit`` embeds every gloss once; ``predict`` returns one CandidateList per
    predicate.
    """

    def __init__(self, embedder=None, top_k: int = 5):
        self.embedder = embedder
        self.top_k = top_k

    def fit(self, synsets: Sequence[Synset], y=None):
        synsets = list(synsets)
        if not synsets:
            raise ValueError("cannot retrieve from an empty synset list")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        self.synsets_ = synsets
        self.gloss_vectors_ = embed_texts(self.embedder, [s.gloss for s in synsets])
        return self

    def scores(self, predicate: str) -> list[tuple[Synset, float]]:
        vec = embed_texts(self.embedder, [predicate])[0]
        return [(s, cosine(vec, g)) for s, g in zip(self.synsets_, self.gloss_vectors_)]

    def retrieve(self, predicate: str) -> CandidateList:
        return CandidateList(predicate, tuple(rank_candidates(self.scores(predicate), self.top_k)))

    def predict(self, predicates: Iterable[str]) -> list[CandidateList]:
        return [self.retrieve(p) for p in predicates]


def retrieve_topk(predicate: str, synsets: Sequence[Synset], emb, k: int = 5) -> CandidateList:
    return GlossRetriever(emb, k).fit(synsets).retrieve(predicate)


def selection_prompt(predicate: str, candidates: CandidateList, sentence: str) -> str:
    lines = "\n".join(
        f"{n}|{syn.id}|{syn.gloss}" for n, (syn, _) in enumerate(candidates.candidates, start=1)
    )
    return load_template("synset_selection").render(
        {"{sentences[obj_id]}": sentence, "{definitions}": lines}
    )


def parse_selection(raw: str) -> int | None:
    """1-based index from ``{"wordnet-id": "<n>"}`` (or a bare number); None if absent."""
    try:
        data = loads_json_object(raw)
    except (json.JSONDecodeError, ValueError):
        data = None
    if isinstance(data, dict) and "wordnet-id" in data:
        value = str(data["wordnet-id"]).strip()
    elif isinstance(data, int) and not isinstance(data, bool):
        value = str(data)
    else:
        value = raw.strip()
    return int(value) if re.fullmatch(r"\d+", value) else None


def select_synset(predicate: str, candidates: CandidateList, sentence: str, llm) -> Synset:
    """Let the LLM pick one of the candidates; falls back to rank 1 on a bad answer."""
    if len(candidates) == 0:
        raise ValueError("select_synset needs at least one candidate")
    if len(candidates) == 1:
        return candidates.candidates[0][0]
    raw = complete_text(llm, BackendRequest("llm", selection_prompt(predicate, candidates, sentence)))
    index = parse_selection(raw)
    if index is None or not 1 <= index <= len(candidates):
        logger.warning("unusable synset selection %r for %r; using rank-1 candidate", raw, predicate)
        return candidates.candidates[0][0]
    return candidates.candidates[index - 1][0]


@dataclass(frozen=True)
class AlignmentRecord:
    """Retrieval and selection outcome for one predicate of one ordered pair."""

    subject: int
    object: int
    predicate: str
    candidates: tuple[tuple[str, float], ...] = ()
    llm_choice: str | None = None
    error: str | None = None

    def labels(self, selector: Selector | str) -> list[str]:
        selector = Selector(selector)
        if self.error is not None or not self.candidates:
            return []
        if selector is Selector.LLM:
            return [self.llm_choice] if self.llm_choice is not None else []
        if selector is Selector.TOP1_COSINE:
            return [self.candidates[0][0]]
        return [cid for cid, _ in self.candidates]

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "object": self.object,
            "predicate": self.predicate,
            "candidates": [[cid, score] for cid, score in self.candidates],
            "llm_choice": self.llm_choice,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AlignmentRecord":
        return cls(
            int(data["subject"]), int(data["object"]), data["predicate"],
            tuple((c[0], float(c[1])) for c in data.get("candidates", [])),
            data.get("llm_choice"), data.get("error"),
        )


def interactions_from_records(records: Iterable[AlignmentRecord],
                              selector: Selector | str) -> dict[tuple[int, int], frozenset[str]]:
    out: dict[tuple[int, int], set[str]] = {}
    for rec in records:
        labels = rec.labels(selector)
        if labels:
            out.setdefault((rec.subject, rec.object), set()).update(labels)
    return {pair: frozenset(v) for pair, v in sorted(out.items())}


def align_predicates(preds: PredicateSet, retriever: GlossRetriever, captions: Mapping[int, str],
                     llm=None, selector: Selector | str = Selector.LLM,
                     n_jobs: int = 1) -> list[AlignmentRecord]:
    """Retrieve (and, for the LLM selector, select) a synset for every predicate.

    Duplicate predicates within a pair are aligned once. A failing predicate
    produces a record carrying the error instead of aborting.
    """
    selector = Selector(selector)
    work = []
    for pair in preds.pairs():
        seen = set()
        for verb in preds.by_pair[pair]:
            if verb not in seen:
                seen.add(verb)
                work.append((pair, verb))

    def align_one(item) -> AlignmentRecord:
        (subj, obj), verb = item
        try:
            cands = retriever.retrieve(verb)
            choice = None
            if selector is Selector.LLM:
                choice = select_synset(verb, cands, captions.get(subj, ""), llm).id
            return AlignmentRecord(subj, obj, verb, tuple((s.id, sc) for s, sc in cands.candidates), choice)
        except Exception as exc:
            logger.warning("alignment of %r for pair (%d, %d) failed: %s", verb, subj, obj, exc)
            return AlignmentRecord(subj, obj, verb, error=f"{type(exc).__name__}: {exc}")

    if n_jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(align_one, work))
    return [align_one(item) for item in work]


def align_interactions(preds: PredicateSet, synsets: Sequence[Synset] | GlossRetriever,
                       captions: Mapping[int, str], llm=None, emb=None,
                       selector: Selector | str = Selector.LLM, top_k: int = 5,
                       n_jobs: int = 1) -> dict[tuple[int, int], frozenset[str]]:
    """Predicted synset set per ordered pair."""
    if not preds.by_pair:
        return {}
    retriever = synsets if isinstance(synsets, GlossRetriever) else GlossRetriever(emb, top_k).fit(synsets)
    records = align_predicates(preds, retriever, captions, llm, selector, n_jobs)
    return interactions_from_records(records, selector)
