"""Audit statistics over augmented ads: skews, exclusivity, uniqueness, averages.

Every statistic counts distinct campaigns (one per ``archive_id``) and is
independent of the order of the input ads.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .core import AdClass, AgeBucket, Gender, normalize_demographics
from .exceptions import EmptyInput

GENDER_HEADINGS = {Gender.MALE: "Men", Gender.FEMALE: "Women", Gender.UNKNOWN: "Custom gender"}


def _distinct_campaigns(ads):
    """One ad per archive_id; later duplicates are ignored."""
    seen = {}
    for ad in ads:
        seen.setdefault(ad.archive_id, ad)
    return [seen[k] for k in sorted(seen)]


def _skew(ads, attr, members):
    ads = _distinct_campaigns(ads)
    counts = Counter(getattr(ad, attr) for ad in ads)
    counts.pop(None, None)  # ads without a demographic distribution
    total = sum(counts.values())
    if total == 0:
        raise EmptyInput("no ads with a demographic distribution")
    return {m: counts.get(m, 0) / total for m in members}


def gender_skew(ads) -> dict:
    """Fraction of ads whose largest gender marginal is each gender."""
    return _skew(ads, "max_gender", Gender)


def age_skew(ads) -> dict:
    """Fraction of ads whose largest age marginal is each age bucket."""
    return _skew(ads, "max_age", AgeBucket)


@dataclass(frozen=True)
class ExclusiveAudienceStats:
    campaign_count: int = 0
    advertiser_count: int = 0
    funding_entity_count: int = 0
    embedded_url_count: int = 0


def exclusive_gender(ad):
    """The single gender holding every nonzero cell, or ``None``."""
    genders = {s.gender for s in ad.base.demographic_distribution if s.fraction > 0}
    return genders.pop() if len(genders) == 1 else None


def _distinct_nonnull(values):
    return len({v for v in values if v is not None})


def exclusive_audience(ads) -> dict:
    groups = {g: [] for g in Gender}
    for ad in _distinct_campaigns(ads):
        g = exclusive_gender(ad)
        if g is not None:
            groups[g].append(ad)
    return {
        g: ExclusiveAudienceStats(
            campaign_count=len(members),
            advertiser_count=len({ad.base.page_id for ad in members}),
            funding_entity_count=_distinct_nonnull(ad.base.funding_entity for ad in members),
            embedded_url_count=_distinct_nonnull(ad.base.embedded_url for ad in members),
        )
        for g, members in groups.items()
    }


@dataclass(frozen=True)
class UniquenessStats:
    campaign_count: int
    advertiser_count: int
    unique_text_count: int
    unique_url_count: int
    funding_entity_count: int

    def __iter__(self):
        return iter(
            (
                self.campaign_count,
                self.advertiser_count,
                self.unique_text_count,
                self.unique_url_count,
                self.funding_entity_count,
            )
        )


def uniqueness_stats(ads) -> UniquenessStats:
    ads = _distinct_campaigns(ads)
    return UniquenessStats(
        campaign_count=len(ads),
        advertiser_count=len({ad.base.page_id for ad in ads}),
        unique_text_count=len({ad.base.body_text for ad in ads}),
        unique_url_count=_distinct_nonnull(ad.base.embedded_url for ad in ads),
        funding_entity_count=_distinct_nonnull(ad.base.funding_entity for ad in ads),
    )


def avg_demographic_matrix(ads) -> dict:
    """Mean fraction per (gender, age) cell; absent cells count as zero."""
    ads = _distinct_campaigns(ads)
    if not ads:
        raise EmptyInput("no ads to average")
    sums = {(g, a): [] for g in Gender for a in AgeBucket}
    for ad in ads:
        for cell in normalize_demographics(ad.base.demographic_distribution):
            sums[(cell.gender, cell.age)].append(cell.fraction)
    # sorted summation keeps the mean independent of input order
    return {key: sum(sorted(vals)) / len(ads) for key, vals in sums.items()}


@dataclass(frozen=True)
class ClassReport:
    ad_class: AdClass
    uniqueness: UniquenessStats
    gender_skew: dict
    age_skew: dict
    exclusive: dict
    avg_demographics: dict
    skew_sample_size: int


@dataclass(frozen=True)
class AuditReport:
    classes: dict  # AdClass -> ClassReport
    start_year_histogram: dict  # year -> campaign count
    excluded_count: int  # ads with no strict label


def build_class_report(ad_class, ads) -> ClassReport:
    ads = _distinct_campaigns(ads)
    with_dist = [ad for ad in ads if ad.max_gender is not None]
    zero_g = {g: 0.0 for g in Gender}
    zero_a = {a: 0.0 for a in AgeBucket}
    return ClassReport(
        ad_class=ad_class,
        uniqueness=uniqueness_stats(ads),
        gender_skew=gender_skew(with_dist) if with_dist else zero_g,
        age_skew=age_skew(with_dist) if with_dist else zero_a,
        exclusive=exclusive_audience(ads),
        avg_demographics=avg_demographic_matrix(ads),
        skew_sample_size=len(with_dist),
    )


def build_report(ads, classes=None) -> AuditReport:
    """Group ads by strict label and compute every statistic per class.

    Ads without a strict label (the rules model disagreed with NB) are
    counted in ``excluded_count`` and otherwise ignored.  Classes listed in
    ``classes`` but absent from the data are omitted.
    """
    ads = _distinct_campaigns(ads)
    wanted = set(AdClass) if classes is None else {AdClass.parse(c) for c in classes}
    grouped = {}
    excluded = 0
    for ad in ads:
        if ad.strict_label is None:
            excluded += 1
        elif ad.strict_label in wanted:
            grouped.setdefault(ad.strict_label, []).append(ad)
    years = Counter(ad.base.delivery_start.year for members in grouped.values() for ad in members)
    return AuditReport(
        classes={c: build_class_report(c, grouped[c]) for c in sorted(grouped)},
        start_year_histogram=dict(sorted(years.items())),
        excluded_count=excluded,
    )


# --- serialization ------------------------------------------------------------------


def _pct(fraction):
    return f"{fraction * 100:.1f}"


def report_to_dict(report: AuditReport) -> dict:
    classes = {}
    for c, cr in report.classes.items():
        u = cr.uniqueness
        classes[c.value] = {
            "campaign_count": u.campaign_count,
            "advertiser_count": u.advertiser_count,
            "funding_entity_count": u.funding_entity_count,
            "unique_text_count": u.unique_text_count,
            "unique_embedded_url_count": u.unique_url_count,
            "skew_sample_size": cr.skew_sample_size,
            "gender_skew": {g.value: v for g, v in cr.gender_skew.items()},
            "age_skew": {a.value: v for a, v in cr.age_skew.items()},
            "exclusive_counts": {
                g.value: {
                    "campaign_count": s.campaign_count,
                    "advertiser_count": s.advertiser_count,
                    "funding_entity_count": s.funding_entity_count,
                    "embedded_url_count": s.embedded_url_count,
                }
                for g, s in cr.exclusive.items()
            },
            "avg_demographic_matrix": {
                g.value: {a.value: cr.avg_demographics[(g, a)] for a in AgeBucket}
                for g in Gender
            },
        }
    return {
        "classes": classes,
        "delivery_start_year_histogram": {str(y): n for y, n in report.start_year_histogram.items()},
        "excluded_count": report.excluded_count,
    }


def report_to_json(report: AuditReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=False) + "\n"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_report(report: AuditReport, out_dir, formats=("json", "csv")) -> list:
    """Write the report as ``report.json`` and/or one CSV per statistic per class.

    Returns the written paths, sorted.  Output is byte-for-byte
    deterministic for a given report.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out / "report.json"
        path.write_text(report_to_json(report), encoding="utf-8")
        written.append(path)
    if "csv" not in formats:
        return sorted(written)

    for c, cr in report.classes.items():
        name = c.value
        u = cr.uniqueness
        tables = {
            f"{name}_gender_skew.csv": (
                ["gender", "percent"],
                [[g.value, _pct(v)] for g, v in cr.gender_skew.items()],
            ),
            f"{name}_age_skew.csv": (
                ["age_skew", "percent"],
                [[a.value, _pct(v)] for a, v in cr.age_skew.items()],
            ),
            f"{name}_exclusive.csv": (
                [""] + [GENDER_HEADINGS[g] for g in Gender],
                [
                    ["Ad Campaigns (#)"] + [cr.exclusive[g].campaign_count for g in Gender],
                    ["Advertisers"] + [cr.exclusive[g].advertiser_count for g in Gender],
                    ["Funding entities"] + [cr.exclusive[g].funding_entity_count for g in Gender],
                    ["Embedded Websites (#)"] + [cr.exclusive[g].embedded_url_count for g in Gender],
                ],
            ),
            f"{name}_uniqueness.csv": (
                ["statistic", "count"],
                [
                    ["campaigns", u.campaign_count],
                    ["advertisers", u.advertiser_count],
                    ["unique_texts", u.unique_text_count],
                    ["unique_embedded_urls", u.unique_url_count],
                    ["funding_entities", u.funding_entity_count],
                ],
            ),
            f"{name}_avg_demographics.csv": (
                ["age"] + [g.value for g in Gender],
                [
                    [a.value] + [_pct(cr.avg_demographics[(g, a)]) for g in Gender]
                    for a in AgeBucket
                ],
            ),
        }
        for filename, (header, rows) in tables.items():
            _write_csv(out / filename, header, rows)
            written.append(out / filename)

    path = out / "delivery_start_year.csv"
    _write_csv(
        path,
        ["year", "ad_campaigns"],
        [[y, n] for y, n in report.start_year_histogram.items()],
    )
    written.append(path)
    return sorted(written)
