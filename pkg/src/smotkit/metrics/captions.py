"""BLEU-4, METEOR, ROUGE-L and CIDEr over a caption corpus.

Text is lowercased and punctuation is replaced by spaces before whitespace
tokenization. Each corpus item is ``(references, hypothesis)``.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from nltk.stem import PorterStemmer

BLEU_MAX_ORDER = 4
METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5
ROUGE_BETA = 1.2
CIDER_MAX_ORDER = 4

METRIC_PARAMS = {
    "tokenizer": "lowercase, punctuation to space, whitespace split",
    "bleu": {"max_order": BLEU_MAX_ORDER, "smoothing": "none", "orders": "effective (<= hypothesis length)"},
    "meteor": {"alpha": METEOR_ALPHA, "beta": METEOR_BETA, "gamma": METEOR_GAMMA,
               "stages": ["exact", "porter_stem"], "multi_reference": "max"},
    "rouge_l": {"beta": ROUGE_BETA, "multi_reference": "max precision / max recall"},
    "cider": {"max_order": CIDER_MAX_ORDER, "variant": "original (no length penalty, no x10)",
              "idf": "log(N / max(1, df)) over the scored corpus references"},
}

_PUNCT = re.compile(r"[^\w\s]|_")
_stemmer = PorterStemmer()


@dataclass
class CaptionEvalResult:
    bleu: float
    meteor: float
    rouge_l: float
    cider: float

    def to_dict(self) -> dict:
        return {"bleu": self.bleu, "meteor": self.meteor, "rouge_l": self.rouge_l, "cider": self.cider}


def tokenize(text: str) -> list[str]:
    return _PUNCT.sub(" ", text.lower()).split()


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _check_corpus(corpus) -> list[tuple[list[list[str]], list[str]]]:
    items = []
    for refs, hyp in corpus:
        if isinstance(refs, str):
            refs = [refs]
        if not refs:
            raise ValueError("every hypothesis needs at least one reference")
        h = tokenize(hyp)
        if not h:
            raise ValueError(f"empty hypothesis {hyp!r}")
        items.append(([tokenize(r) for r in refs], h))
    if not items:
        raise ValueError("empty caption corpus")
    return items


# -- BLEU -------------------------------------------------------------------

def _bleu(items) -> float:
    matched = [0] * BLEU_MAX_ORDER
    total = [0] * BLEU_MAX_ORDER
    hyp_len = ref_len = 0
    for refs, hyp in items:
        hyp_len += len(hyp)
        ref_len += min((len(r) for r in refs), key=lambda L: (abs(L - len(hyp)), L))
        for n in range(1, BLEU_MAX_ORDER + 1):
            counts = ngrams(hyp, n)
            max_ref: Counter = Counter()
            for r in refs:
                max_ref |= ngrams(r, n)
            matched[n - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())
            total[n - 1] += sum(counts.values())
    orders = [n for n in range(BLEU_MAX_ORDER) if total[n] > 0]
    if any(matched[n] == 0 for n in orders):
        return 0.0
    log_p = sum(math.log(matched[n] / total[n]) for n in orders) / len(orders)
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return bp * math.exp(log_p)


# -- METEOR -----------------------------------------------------------------

@lru_cache(maxsize=65536)
def _stem(word: str) -> str:
    return _stemmer.stem(word)


def _align(hyp: Sequence[str], ref: Sequence[str]) -> list[tuple[int, int]]:
    """Exact then stem matching; each hyp token prefers the ref slot that extends
    the previous match, else the first free slot."""
    hyp_used: dict[int, int] = {}
    ref_used: set[int] = set()
    for key in (lambda w: w, _stem):
        rk = [key(w) for w in ref]
        for i, w in enumerate(hyp):
            if i in hyp_used:
                continue
            k = key(w)
            free = [j for j, x in enumerate(rk) if x == k and j not in ref_used]
            if not free:
                continue
            prev = hyp_used.get(i - 1)
            j = prev + 1 if prev is not None and prev + 1 in free else free[0]
            hyp_used[i] = j
            ref_used.add(j)
    return sorted(hyp_used.items())


def meteor_single(hyp: Sequence[str], ref: Sequence[str]) -> float:
    pairs = _align(hyp, ref)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision, recall = m / len(hyp), m / len(ref)
    fmean = precision * recall / (METEOR_ALPHA * precision + (1 - METEOR_ALPHA) * recall)
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    penalty = METEOR_GAMMA * (chunks / m) ** METEOR_BETA
    return fmean * (1 - penalty)


def _meteor(items) -> float:
    return sum(max(meteor_single(h, r) for r in refs) for refs, h in items) / len(items)


# -- ROUGE-L ----------------------------------------------------------------

def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l_single(refs: Sequence[Sequence[str]], hyp: Sequence[str]) -> float:
    precs, recs = [], []
    for r in refs:
        lcs = lcs_length(hyp, r)
        precs.append(lcs / len(hyp))
        recs.append(lcs / len(r) if r else 0.0)
    p, r = max(precs), max(recs)
    if p == 0 or r == 0:
        return 0.0
    b2 = ROUGE_BETA ** 2
    return (1 + b2) * p * r / (r + b2 * p)


def _rouge(items) -> float:
    return sum(rouge_l_single(refs, h) for refs, h in items) / len(items)


# -- CIDEr ------------------------------------------------------------------

def _tfidf(counts: Counter, df: Counter, log_n: float) -> dict:
    total = sum(counts.values())
    if total == 0:
        return {}
    return {g: (c / total) * (log_n - math.log(max(1.0, df[g]))) for g, c in counts.items()}


def _cos(u: dict, v: dict) -> float:
    nu = math.sqrt(sum(x * x for x in u.values()))
    nv = math.sqrt(sum(x * x for x in v.values()))
    if nu == 0 or nv == 0:
        return 0.0
    return sum(x * v.get(g, 0.0) for g, x in u.items()) / (nu * nv)


def _cider(items) -> float:
    log_n = math.log(len(items))
    per_order_df = []
    for n in range(1, CIDER_MAX_ORDER + 1):
        df: Counter = Counter()
        for refs, _ in items:
            df.update(set().union(*(ngrams(r, n).keys() for r in refs)))
        per_order_df.append(df)
    scores = []
    for refs, hyp in items:
        total = 0.0
        for n in range(1, CIDER_MAX_ORDER + 1):
            df = per_order_df[n - 1]
            h = _tfidf(ngrams(hyp, n), df, log_n)
            total += sum(_cos(h, _tfidf(ngrams(r, n), df, log_n)) for r in refs) / len(refs)
        scores.append(total / CIDER_MAX_ORDER)
    return sum(scores) / len(scores)


def score_captions(corpus: Sequence[tuple[Sequence[str] | str, str]]) -> CaptionEvalResult:
    """Corpus-level scores. BLEU pools n-gram counts; the others average per item."""
    items = _check_corpus(corpus)
    return CaptionEvalResult(_bleu(items), _meteor(items), _rouge(items), _cider(items))


def eval_caption(refs: Sequence[str] | str, hyp: str) -> CaptionEvalResult:
    """Scores for a single hypothesis. CIDEr is 0 here since every IDF weight is log(1)."""
    return score_captions([(refs, hyp)])
