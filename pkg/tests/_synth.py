"""Builders for synthetic records, augmented ads and labeled corpora."""

import json
import random
from datetime import datetime, timedelta, timezone

from adaudit.augment import AugmentedAd, calendar_features, demographic_maxima
from adaudit.core import AdClass, AgeBucket, DemographicShare, Gender, parse_ad_record
from adaudit.evaluation import strict_filter

T0 = datetime(2019, 10, 1, tzinfo=timezone.utc)


def ad_doc(archive_id, text="", cells=((("25-34", "female", "1.0"),)), **extra):
    """A wire document; ``cells`` is a sequence of (age, gender, percentage)."""
    doc = {
        "archiveID": str(archive_id),
        "ad_creation_time": "2019-10-01T00:00:00+0000",
        "ad_delivery_start_time": "2019-10-01T00:00:00+0000",
        "text": text,
        "page_id": "p1",
        "page_name": "Page 1",
        "currency": "USD",
        "impressions": {"lower_bound": "1000", "upper_bound": "1999"},
        "spend": {"lower_bound": "0", "upper_bound": "99"},
        "publisher_platforms": ["facebook"],
        "demographic_distribution": [
            {"age": a, "gender": g, "percentage": p} for a, g, p in cells
        ],
    }
    doc.update(extra)
    return doc


def write_jsonl(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write((doc if isinstance(doc, str) else json.dumps(doc)) + "\n")
    return path


def make_ad(
    archive_id,
    cells,
    *,
    label=AdClass.CREDIT,
    text="",
    page_id="p1",
    funding=None,
    url=None,
    start=None,
):
    """An AugmentedAd whose strict label is ``label``.

    ``cells`` holds (AgeBucket, Gender, fraction) triples; maxima and
    calendar features are derived the same way augment_record does.
    """
    from adaudit.core import AdRecord

    shares = tuple(DemographicShare(a, g, f) for a, g, f in cells)
    start = start or T0
    record = AdRecord(
        archive_id=str(archive_id),
        creation_time=start,
        delivery_start=start,
        body_text=text,
        page_id=page_id,
        funding_entity=funding,
        embedded_url=url,
        demographic_distribution=shares,
    )
    maxima = demographic_maxima(shares) if shares else (None, None, None)
    return AugmentedAd(
        base=record,
        predicted_label=label,
        rule_labels=frozenset() if label is AdClass.OTHER else frozenset({label}),
        strict_label=strict_filter(label, frozenset({label})),
        max_percentage=maxima[0],
        max_gender=maxima[1],
        max_age=maxima[2],
        **calendar_features(start, None),
    )


def skewed_ad(archive_id, gender, age=AgeBucket.A25_34, **kw):
    """An ad where ``gender`` and ``age`` carry the majority share."""
    other = Gender.FEMALE if gender is Gender.MALE else Gender.MALE
    other_age = AgeBucket.A65_PLUS if age is not AgeBucket.A65_PLUS else AgeBucket.A13_17
    cells = [(age, gender, 0.6), (other_age, other, 0.4)]
    return make_ad(archive_id, cells, **kw)


# --- labeled corpora ------------------------------------------------------------------

CLASS_ORDER = list(AdClass)


def signature_vocabulary(n_per_class=15):
    return {c: [f"{c.value}{i}" for i in range(n_per_class)] for c in CLASS_ORDER}


def synthetic_corpus(seed=7, docs_per_class=500, doc_len=20, noise=0.3, n_noise=200):
    """Texts built from class-signature words with a ``noise`` share of shared words.

    Returns a list of ``(text, AdClass)``.
    """
    rng = random.Random(seed)
    signatures = signature_vocabulary()
    shared = [f"w{i}" for i in range(n_noise)]
    corpus = []
    for c in CLASS_ORDER:
        for _ in range(docs_per_class):
            words = [
                rng.choice(shared) if rng.random() < noise else rng.choice(signatures[c])
                for _ in range(doc_len)
            ]
            corpus.append((" ".join(words), c))
    rng.shuffle(corpus)
    return corpus


def synthetic_rules(n_terms=10):
    """Rule term lists drawn from the first ``n_terms`` signature words per class."""
    sig = signature_vocabulary()
    return {c.value: sig[c][:n_terms] for c in CLASS_ORDER if c is not AdClass.OTHER}


def random_fixture_docs(n, seed=0, start=T0):
    rng = random.Random(seed)
    words = ["loan", "jobs", "hiring", "rent", "vote", "apply", "now", "credit", "home", "today"]
    docs = []
    for i in range(n):
        f = rng.choice(["0.25", "0.5", "0.75"])
        rest = f"{1 - float(f):.2f}"
        ts = (start + timedelta(hours=i)).strftime("%Y-%m-%dT%H:%M:%S+0000")
        docs.append(
            ad_doc(
                f"ad{i:06d}",
                " ".join(rng.choice(words) for _ in range(6)),
                cells=[("25-34", "male", f), ("35-44", "female", rest)],
                ad_delivery_start_time=ts,
                ad_creation_time=ts,
                page_id=f"page{rng.randrange(30)}",
            )
        )
    return docs


def parse(doc):
    return parse_ad_record(doc)
