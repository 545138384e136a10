"""Random documents with injected entity mentions, for engine/oracle checks."""

import random

from datamap.taxonomy import load_default_rules, load_default_taxonomy

FILLER = (
    "energy access policy results region household indicator model grid "
    "update date median who un gis the of and in for with was were"
).split()
TRIGGERS = ["data", "Data", "dataset", "database", "data set", "DATA"]
NOISE_AFFIXES = ["", "", "", "x", "s", "-", "(", ")", ",", "2019"]


def surface_forms(rules):
    forms = []
    for rule in rules:
        for p in rule.patterns:
            forms.append(p.literal)
            if not p.case_sensitive:
                forms.append(p.literal.lower())
                forms.append(p.literal.upper())
    return forms


def make_corpus(n_docs, seed=0, rules=None):
    """Return [(record_id, raw_text)] with mentions glued to random affixes."""
    rng = random.Random(seed)
    rules = rules or load_default_rules(load_default_taxonomy())
    forms = surface_forms(rules)
    docs = []
    for d in range(n_docs):
        sentences = []
        for _ in range(rng.randint(0, 12)):
            words = [rng.choice(FILLER) for _ in range(rng.randint(2, 10))]
            for _ in range(rng.randint(0, 3)):
                mention = rng.choice(NOISE_AFFIXES) + rng.choice(forms) + rng.choice(NOISE_AFFIXES)
                words.insert(rng.randrange(len(words) + 1), mention)
            if rng.random() < 0.6:
                words.insert(rng.randrange(len(words) + 1), rng.choice(TRIGGERS))
            sentence = " ".join(words)
            sentences.append(sentence[0].upper() + sentence[1:] + rng.choice([".", ".", "?", "!"]))
        docs.append((f"doc-{d:04d}", " ".join(sentences)))
    return docs
