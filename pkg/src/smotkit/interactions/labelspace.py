"""Label spaces used to score interactions at different granularities."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .retrieval import Synset

OFFICIAL_VOCABULARY_SIZE = 335
OFFICIAL_LEMMA_CLASSES = 259
FREQUENT_SIZE = 9
CLUSTER_COUNT = 20


class LabelSpaceError(ValueError):
    pass


class LabelSpaceName(str, enum.Enum):
    FULL = "full"
    LEMMA_MERGED = "lemma_merged"
    FREQUENT = "frequent"
    CLUSTERED = "clustered"


@dataclass(frozen=True)
class LabelSpace:
    """Class ids plus the map from synset ids to classes.

    Class ids map to themselves, so mapping a representative is a no-op.
    Under ``frequent`` the map is partial and unmapped labels are dropped.
    """

    name: LabelSpaceName
    classes: tuple[str, ...]
    mapping: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        full = dict(self.mapping)
        for c in self.classes:
            full.setdefault(c, c)
        object.__setattr__(self, "mapping", full)

    def __len__(self) -> int:
        return len(self.classes)

    def map_label(self, label: str) -> str | None:
        return self.mapping.get(label)

    def map_set(self, labels: Iterable[str]) -> frozenset[str]:
        return frozenset(c for c in (self.map_label(l) for l in labels) if c is not None)


def build_label_space(name: LabelSpaceName | str, synsets: Sequence[Synset],
                      aux: Sequence[str] | Mapping[str, str] | None = None,
                      expected_classes: int | None = None) -> LabelSpace:
    """Build one of the four label spaces over the vocabulary ``synsets``.

    ``aux`` is the frequent-label list (``frequent``) or a label -> cluster
    assignment (``clustered``). ``expected_classes`` overrides the class-count
    check; by default lemma merging of a 335-label vocabulary must give 259
    classes, ``frequent`` must have 9 labels and ``clustered`` 20 clusters.
    """
    name = LabelSpaceName(name)
    ids = [s.id for s in synsets]
    if len(set(ids)) != len(ids):
        raise LabelSpaceError("vocabulary contains duplicate label ids")

    if name is LabelSpaceName.FULL:
        space = LabelSpace(name, tuple(ids), {i: i for i in ids})
        expected = expected_classes
    elif name is LabelSpaceName.LEMMA_MERGED:
        mapping = {s.id: s.lemma for s in synsets}
        classes = tuple(dict.fromkeys(s.lemma for s in synsets))
        space = LabelSpace(name, classes, mapping)
        expected = expected_classes
        if expected is None and len(ids) == OFFICIAL_VOCABULARY_SIZE:
            expected = OFFICIAL_LEMMA_CLASSES
    elif name is LabelSpaceName.FREQUENT:
        if aux is None:
            raise LabelSpaceError("the frequent label space needs a frequent-label list")
        labels = list(aux)
        unknown = [l for l in labels if l not in set(ids)]
        if unknown:
            raise LabelSpaceError(f"frequent labels not in vocabulary: {unknown}")
        space = LabelSpace(name, tuple(dict.fromkeys(labels)), {l: l for l in labels})
        expected = FREQUENT_SIZE if expected_classes is None else expected_classes
    else:
        if aux is None or not isinstance(aux, Mapping):
            raise LabelSpaceError("the clustered label space needs a label -> cluster assignment")
        missing = [i for i in ids if i not in aux]
        if missing:
            raise LabelSpaceError(f"cluster assignment misses {len(missing)} labels, e.g. {missing[:5]}")
        mapping = {i: aux[i] for i in ids}
        classes = tuple(sorted(set(mapping.values())))
        clash = sorted(set(classes) & set(ids))
        if clash:
            raise LabelSpaceError(f"cluster ids collide with label ids: {clash}")
        space = LabelSpace(name, classes, mapping)
        expected = CLUSTER_COUNT if expected_classes is None else expected_classes

    if expected is not None and len(space) != expected:
        raise LabelSpaceError(f"{name.value} label space has {len(space)} classes, expected {expected}")
    return space


class LabelSpaceMapper(BaseEstimator, TransformerMixin):
    """Maps sets of synset ids into a label space.

    ``fit`` takes the vocabulary; ``transform`` takes an iterable of label
    sets and returns the mapped sets.
    """

    def __init__(self, name: str = "full", aux=None, expected_classes: int | None = None):
        self.name = name
        self.aux = aux
        self.expected_classes = expected_classes

    def fit(self, X: Sequence[Synset], y=None):
        self.space_ = build_label_space(self.name, X, self.aux, self.expected_classes)
        return self

    def transform(self, X: Iterable[Iterable[str]]) -> list[frozenset[str]]:
        return [self.space_.map_set(labels) for labels in X]
