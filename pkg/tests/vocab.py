"""Synthetic label vocabularies for tests (no benchmark data is bundled)."""
import random

from smotkit.interactions import Synset

WORDS = (
    "person hand arm face eye voice object cup ball door table chair paper phone bag food "
    "gently quickly slowly loudly softly together toward away across around behind beside "
    "move hold speak watch turn lift push pull carry touch raise lower open close point wave "
    "friend child stranger partner group crowd team music game gift letter tool coat hat"
).split()


def make_vocabulary(n_labels=335, n_lemmas=259, seed=0):
    """``n_labels`` synset ids over exactly ``n_lemmas`` distinct lemmas with random glosses."""
    rng = random.Random(seed)
    lemmas = [f"verb{k:03d}" for k in range(n_lemmas)]
    owners = list(lemmas) + [rng.choice(lemmas) for _ in range(n_labels - n_lemmas)]
    senses = {}
    synsets = []
    for lemma in owners:
        senses[lemma] = senses.get(lemma, 0) + 1
        pos = "v" if rng.random() < 0.85 else "n"
        gloss = " ".join(rng.choice(WORDS) for _ in range(rng.randint(4, 10)))
        synsets.append(Synset(f"{lemma}.{pos}.{senses[lemma]:02d}", gloss))
    rng.shuffle(synsets)
    return synsets


def random_predicate(rng):
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 3)))
