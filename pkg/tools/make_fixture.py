#!/usr/bin/env python3
"""Generate the bundled synthetic SDG 7 fixture corpus.

Writes records.csv (87 candidate records), store/<id>.txt for the retained
documents, truth.json (injected labels per document) and config.json.
Output is a pure function of the seed.

    python tools/make_fixture.py [OUT_DIR]
"""

import json
import random
import sys
import unicodedata
from pathlib import Path

SEED = 7
DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "datamap" / "data" / "sdg7_fixture"

S = "sources/organisational/international/"
T = "sources/traditional-statistics/"

# leaf -> (document frequency, surface forms used in data sentences)
LEAVES = {
    S + "other/world-bank": (22, ["World Bank", "World Bank Open Data", "World Development Indicators"]),
    S + "un/un-statistics": (17, ["UNdata", "UN Statistics Division", "United Nations Statistics Division", "UN database"]),
    S + "eu/eurostat": (13, ["Eurostat"]),
    S + "other/iea": (10, ["International Energy Agency", "IEA", "International Energy Agency (IEA)"]),
    T + "survey": (9, ["survey", "surveys"]),
    S + "un/fao": (5, ["Food and Agriculture Organization", "FAO"]),
    S + "eu/copernicus": (5, ["Copernicus"]),
    T + "census": (4, ["census", "censuses"]),
    S + "eu/edgar": (4, ["EDGAR", "Emissions Database for Global Atmospheric Research"]),
    "sources/organisational/national": (4, ["national statistics office", "national statistical office"]),
    T + "interview": (3, ["interviews", "interview"]),
    T + "questionnaire": (3, ["questionnaire", "questionnaires"]),
    S + "un/sdsn": (3, ["Sustainable Development Solutions Network", "SDSN"]),
    T + "focus-group": (2, ["focus groups", "focus group"]),
    S + "un/unesco": (2, ["UNESCO"]),
    S + "un/who": (2, ["World Health Organization", "WHO"]),
    S + "eu/esdac": (2, ["ESDAC", "European Soil Data Centre"]),
    "types/resource/electricity": (20, ["electricity"]),
    "types/resource/land-use": (14, ["land use", "land cover"]),
    "types/resource/solar": (13, ["solar"]),
    "types/resource/water-use": (12, ["water use", "water consumption"]),
    "types/resource/biomass": (6, ["biomass"]),
    "types/resource/heat": (4, ["heat"]),
    "types/resource/mineral": (3, ["mineral", "minerals"]),
    "types/geographic/satellite-imagery": (6, ["satellite imagery", "remote sensing"]),
    "types/geographic/gis": (5, ["GIS", "Geographic Information System"]),
    "types/geographic/gps": (2, ["GPS", "Global Positioning System"]),
    "types/geographic/openstreetmap": (1, ["OpenStreetMap"]),
    "types/weather": (2, ["weather"]),
    "types/sensor": (2, ["sensor", "sensors"]),
}

SOURCE_TEMPLATES = [
    "Data were obtained from the {x} for the period 2000 to 2019.",
    "We retrieved the relevant data from {x} and harmonised the country codes.",
    "The dataset compiled by the {x} covers most low and middle income countries.",
    "Country level data published by {x} were used to validate the estimates.",
    "Indicator data from the {x} database complement the primary sources.",
]
TRADITIONAL_TEMPLATES = [
    "Primary data were collected through a household {x} in two districts.",
    "The {x} data cover rural and urban respondents alike.",
    "Additional data came from a {x} conducted with local stakeholders.",
]
TYPE_TEMPLATES = [
    "Data on {x} were compiled for each region.",
    "We processed {x} data for the whole study area.",
    "The analysis relies on {x} data aggregated to the district level.",
    "A dataset describing {x} was assembled from several public repositories.",
]
DISTRACTORS = [
    "The {x} is frequently cited in policy debates on energy access.",
    "Reports by the {x} have shaped national energy strategies.",
    "Earlier studies discuss the role of {x} in some detail.",
]
TYPE_DISTRACTORS = [
    "Interest in {x} has grown among planners in recent years.",
    "Earlier studies discuss {x} in some detail.",
]
DECOYS = [
    "Respondents who reported missing data were excluded from the sample.",
    "The data were last updated on a fixed date each quarter.",
    "Data on median prices were not available for every country.",
    "The gis layer mentioned in earlier drafts held no data of interest.",
    "Households that were unsurveyed in 2018 lack any data points.",
    "See Fig. 3 for an overview of the data used.",
]
FILLER = [
    "Access to affordable and clean energy remains uneven across regions.",
    "Energy poverty affects millions of households worldwide.",
    "Policy instruments differ considerably between countries.",
    "The results highlight the need for coordinated investment.",
    "Renewable deployment has accelerated over the past decade.",
    "Section 4 discusses the implications for policy makers.",
    "As shown in Fig. 2, the trend is consistent across the sample.",
    "Previous work (Smith et al. 2019) reached similar conclusions.",
    "Several indicators, e.g. access rates and tariffs, were compared.",
    "Wind power capacity grew steadily in most regions.",
    "Clean cooking programmes have had mixed outcomes.",
    "Financing remains the main barrier to universal access.",
    "Urban households typically enjoy more reliable supply.",
    "The methodology follows established practice in energy economics.",
    "Limitations of the approach are discussed in the final section.",
]
TOPICS = [
    "energy access",
    "clean cooking",
    "renewable transitions",
    "energy efficiency",
    "off-grid systems",
    "wind power",
    "energy justice",
    "decarbonisation pathways",
]
REGIONS = [
    "Sub-Saharan Africa",
    "South Asia",
    "Latin America",
    "the Nordic countries",
    "Southeast Asia",
    "small island states",
    unicodedata.normalize("NFD", "São Tomé and Príncipe"),
]
QUALIFIERS = ["Assessing", "Monitoring", "Mapping", "Measuring", "Modelling", "Tracking"]

N_RETAINED = 53
N_UNLABELED = 2

# (count, overrides) for the excluded candidates, in funnel order
EXCLUSIONS = [
    (4, {"year": 2015}),
    (2, {"year": 2014, "full_text_accessible": "false"}),
    (3, {"doc_type": "Review"}),
    (2, {"doc_type": "Book Chapter"}),
    (3, {"source_type": "Book Series"}),
    (4, {"pub_stage": "Article in Press"}),
    (2, {"language": "Spanish"}),
    (1, {"language": "Chinese"}),
    (7, {"full_text_accessible": "false"}),
    (4, {"sdg_relevant": "no"}),
    (2, {"sdg_relevant": "unreviewed"}),
]


def assign_labels(rng, doc_ids):
    labelable = doc_ids[N_UNLABELED:]
    for _ in range(1000):
        truth = {d: [] for d in doc_ids}
        for leaf, (count, _) in LEAVES.items():
            for d in rng.sample(labelable, count):
                truth[d].append(leaf)
        if all(truth[d] for d in labelable):
            return {d: sorted(v) for d, v in truth.items()}
    raise RuntimeError("could not cover every labelable document")


def mention_sentence(rng, leaf):
    form = rng.choice(LEAVES[leaf][1])
    if leaf.startswith("types/"):
        templates = TYPE_TEMPLATES
    elif leaf.startswith(T):
        templates = TRADITIONAL_TEMPLATES
    else:
        templates = SOURCE_TEMPLATES
    return rng.choice(templates).format(x=form)


def distractor_sentence(rng, leaf):
    form = LEAVES[leaf][1][0]
    templates = TYPE_DISTRACTORS if leaf.startswith("types/") or leaf.startswith(T) else DISTRACTORS
    return rng.choice(templates).format(x=form)


def wrap(rng, words, width=72):
    """Wrap into lines, sometimes hyphenating a long lowercase word at the break."""
    lines, line = [], ""
    for word in words:
        candidate = f"{line} {word}" if line else word
        if len(candidate) <= width or not line:
            line = candidate
            continue
        if len(word) >= 9 and word.isalpha() and word.islower() and rng.random() < 0.6:
            cut = rng.randint(3, len(word) - 3)
            lines.append(f"{line} {word[:cut]}-")
            line = word[cut:]
        else:
            lines.append(line)
            line = word
    if line:
        lines.append(line)
    return "\n".join(lines)


def document_text(rng, record, leaves, all_leaves):
    sentences = []
    for leaf in leaves:
        for _ in range(rng.randint(1, 3)):
            sentences.append(mention_sentence(rng, leaf))
    others = [l for l in all_leaves if l not in leaves]
    sentences.append(distractor_sentence(rng, rng.choice(others)))
    sentences.extend(rng.sample(DECOYS, rng.randint(1, 2)))
    sentences.extend(rng.sample(FILLER, rng.randint(4, 7)))
    rng.shuffle(sentences)

    paragraphs = []
    while sentences:
        take = rng.randint(2, 4)
        chunk, sentences = sentences[:take], sentences[take:]
        paragraphs.append(wrap(rng, " ".join(chunk).split(" ")))
    pages, page = [], []
    for i, para in enumerate(paragraphs):
        page.append(para)
        if len(page) == 2 and i < len(paragraphs) - 1:
            pages.append("\n\n".join(page))
            page = []
    if page:
        pages.append("\n\n".join(page))
    head = f"{record['title']}\n\nAbstract\n{wrap(rng, record['abstract'].split(' '))}\n\n"
    text = head + "\f".join(pages) + "\n"
    if rng.random() < 0.3:
        text = text.replace("\n", "\r\n")
    return text


def make_records(rng):
    total = N_RETAINED + sum(n for n, _ in EXCLUSIONS)
    eids = sorted(rng.sample(range(10**8, 10**9), total))
    plan = [{}] * N_RETAINED + [o for n, o in EXCLUSIONS for _ in range(n)]
    rng.shuffle(plan)
    records = []
    for eid, overrides in zip(eids, plan):
        title = f"{rng.choice(QUALIFIERS)} {rng.choice(TOPICS)} for SDG 7 in {rng.choice(REGIONS)}"
        rec = {
            "id": f"2-s2.0-85{eid}",
            "title": title,
            "abstract": f"This study examines {rng.choice(TOPICS)} using open data. {rng.choice(FILLER)}",
            "keywords": "SDG 7;energy;data",
            "year": rng.randint(2016, 2021),
            "doc_type": rng.choice(["Article", "Article", "Conference Paper"]),
            "source_type": "Journal",
            "pub_stage": "Final",
            "language": "English",
            "full_text_accessible": "true",
            "sdg_relevant": "yes",
            "link": f"https://www.scopus.com/record/display.uri?eid=2-s2.0-85{eid}",
        }
        if rec["doc_type"] == "Conference Paper":
            rec["source_type"] = "Conference Proceeding"
        rec.update(overrides)
        records.append(rec)
    return records


def retained(rec):
    return (
        int(rec["year"]) > 2015
        and rec["doc_type"] in ("Article", "Conference Paper")
        and rec["source_type"] in ("Journal", "Conference Proceeding")
        and rec["pub_stage"] == "Final"
        and rec["language"] == "English"
        and rec["full_text_accessible"] == "true"
        and rec["sdg_relevant"] == "yes"
    )


def generate(out: Path) -> None:
    rng = random.Random(SEED)
    records = make_records(rng)
    kept = [r for r in records if retained(r)]
    assert len(records) == 87 and len(kept) == N_RETAINED, (len(records), len(kept))
    truth = assign_labels(rng, [r["id"] for r in kept])

    out.mkdir(parents=True, exist_ok=True)
    columns = list(records[0])
    import csv

    with open(out / "records.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)
    store = out / "store"
    store.mkdir(exist_ok=True)
    for old in store.glob("*.txt"):
        old.unlink()
    all_leaves = list(LEAVES)
    for rec in kept:
        text = document_text(rng, rec, truth[rec["id"]], all_leaves)
        with open(store / f"{rec['id']}.txt", "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump({"seed": SEED, "labels": truth}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump({"records_file": "records.csv", "store_dir": "store", "parallelism": 1}, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    generate(Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_OUT)
