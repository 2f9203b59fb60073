"""Derived per-ad features: classifier labels, demographic maxima, calendar fields."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from sklearn.base import BaseEstimator, TransformerMixin

from .core import (
    AdClass,
    AdRecord,
    AgeBucket,
    CreditSubclass,
    Gender,
    normalize_demographics,
    parse_ad_record,
    record_to_document,
)
from .evaluation import strict_filter
from .exceptions import EmptyDistribution, InvalidValue
from .naive_bayes import NbModel, predict
from .rules import RuleSet, classify_all, subclassify_credit
from .textproc import text_to_bow

log = logging.getLogger(__name__)

DAYS_OF_WEEK = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")

SECONDS_PER_MINUTE = 60
SECONDS_PER_HOUR = 3600
SECONDS_PER_DAY = 86400
SECONDS_PER_WEEK = 604800
# average Gregorian month: 365.2425 days / 12
SECONDS_PER_MONTH = 2629746


@dataclass(frozen=True)
class AugmentedAd:
    base: AdRecord
    predicted_label: AdClass
    rule_labels: frozenset = frozenset()
    strict_label: Optional[AdClass] = None
    ad_subclass: frozenset = frozenset()
    max_percentage: Optional[float] = None
    max_gender: Optional[Gender] = None
    max_age: Optional[AgeBucket] = None
    start_day_of_week: str = ""
    stop_day_of_week: Optional[str] = None
    start_week: int = 0
    stop_week: Optional[int] = None
    duration_seconds: Optional[float] = None
    duration_minutes: Optional[float] = None
    duration_hours: Optional[float] = None
    duration_days: Optional[float] = None
    duration_weeks: Optional[float] = None
    duration_months: Optional[float] = None
    start_semester: str = ""
    stop_semester: Optional[str] = None
    start_quarter: str = ""
    stop_quarter: Optional[str] = None
    warnings: tuple = field(default=(), compare=False)

    @property
    def archive_id(self):
        return self.base.archive_id


def demographic_maxima(shares):
    """Return ``(max_percentage, max_gender, max_age)`` for one distribution.

    ``max_percentage`` is the largest single cell.  Gender and age come from
    the marginal sums; ties go to the earlier enumeration member.
    """
    shares = list(shares)
    if not shares:
        raise EmptyDistribution("ad has no demographic distribution")
    cells = normalize_demographics(shares)
    by_gender = {g: 0.0 for g in Gender}
    by_age = {a: 0.0 for a in AgeBucket}
    for cell in cells:
        by_gender[cell.gender] += cell.fraction
        by_age[cell.age] += cell.fraction
    # max() keeps the first maximal key, i.e. enumeration order
    return (
        max(cell.fraction for cell in cells),
        max(Gender, key=lambda g: by_gender[g]),
        max(AgeBucket, key=lambda a: by_age[a]),
    )


def _semester(ts):
    return "H1" if ts.month <= 6 else "H2"


def _quarter(ts):
    return f"Q{(ts.month - 1) // 3 + 1}"


def calendar_features(start, stop=None) -> dict:
    """Day-of-week, ISO week, semester, quarter and duration fields (UTC)."""
    out = {
        "start_day_of_week": DAYS_OF_WEEK[start.weekday()],
        "start_week": start.isocalendar()[1],
        "start_semester": _semester(start),
        "start_quarter": _quarter(start),
    }
    if stop is None:
        return out
    seconds = (stop - start).total_seconds()
    out.update(
        stop_day_of_week=DAYS_OF_WEEK[stop.weekday()],
        stop_week=stop.isocalendar()[1],
        stop_semester=_semester(stop),
        stop_quarter=_quarter(stop),
        duration_seconds=seconds,
        duration_minutes=seconds / SECONDS_PER_MINUTE,
        duration_hours=seconds / SECONDS_PER_HOUR,
        duration_days=seconds / SECONDS_PER_DAY,
        duration_weeks=seconds / SECONDS_PER_WEEK,
        duration_months=seconds / SECONDS_PER_MONTH,
    )
    return out


def augment_record(ad: AdRecord, nb: NbModel, rules: RuleSet) -> AugmentedAd:
    """Classify ``ad`` with both models and attach every derived feature.

    Sub-classes are only assigned when the strict label is credit.  An empty
    demographic distribution leaves the maxima unset and adds a warning
    instead of raising.
    """
    label, _ = predict(nb, text_to_bow(ad.body_text))
    rule_labels = frozenset(classify_all(rules, ad.body_text))
    strict = strict_filter(label, rule_labels)
    subclass = (
        frozenset(subclassify_credit(rules, ad.body_text))
        if strict is AdClass.CREDIT
        else frozenset()
    )

    warnings = []
    try:
        max_pct, max_gender, max_age = demographic_maxima(ad.demographic_distribution)
    except EmptyDistribution as exc:
        log.warning("ad %s: %s", ad.archive_id, exc)
        warnings.append(str(exc))
        max_pct = max_gender = max_age = None

    return AugmentedAd(
        base=ad,
        predicted_label=label,
        rule_labels=rule_labels,
        strict_label=strict,
        ad_subclass=subclass,
        max_percentage=max_pct,
        max_gender=max_gender,
        max_age=max_age,
        warnings=tuple(warnings),
        **calendar_features(ad.delivery_start, ad.delivery_stop),
    )


class AdAugmenter(BaseEstimator, TransformerMixin):
    """Transformer from :class:`AdRecord` batches to :class:`AugmentedAd` lists.

    ``model`` and ``rules`` are already-built artifacts; ``fit`` only checks
    that both are present.
    """

    def __init__(self, model=None, rules=None):
        self.model = model
        self.rules = rules

    def fit(self, X=None, y=None):
        if not isinstance(self.model, NbModel):
            raise TypeError("AdAugmenter needs a trained NbModel")
        if not isinstance(self.rules, RuleSet):
            raise TypeError("AdAugmenter needs a compiled RuleSet")
        return self

    def transform(self, X):
        self.fit()
        return [augment_record(ad, self.model, self.rules) for ad in X]


# --- wire format ------------------------------------------------------------------

_DERIVED_KEYS = (
    ("predicted_label", "predicted_label"),
    ("ad_subClass", "ad_subclass"),
    ("max_percentage", "max_percentage"),
    ("max_genderDemographic", "max_gender"),
    ("max_ageDemographic", "max_age"),
    ("startTimeDayOfWeek", "start_day_of_week"),
    ("stopTimeDayOfWeek", "stop_day_of_week"),
    ("adStartWeek", "start_week"),
    ("adStopWeek", "stop_week"),
    ("adDuration_Seconds", "duration_seconds"),
    ("adDuration_Minutes", "duration_minutes"),
    ("adDuration_Hours", "duration_hours"),
    ("adDuration_Days", "duration_days"),
    ("adDuration_Weeks", "duration_weeks"),
    ("adDuration_Months", "duration_months"),
    ("adStart_Semester", "start_semester"),
    ("adStop_Semester", "stop_semester"),
    ("startQuarter", "start_quarter"),
    ("stopQuarter", "stop_quarter"),
    ("rule_labels", "rule_labels"),
    ("strict_label", "strict_label"),
)

DERIVED_FIELD_NAMES = tuple(wire for wire, _ in _DERIVED_KEYS)


def _encode(value):
    if isinstance(value, frozenset):
        return sorted(v.value for v in value)
    if isinstance(value, (AdClass, Gender, AgeBucket, CreditSubclass)):
        return value.value
    return value


def augmented_to_document(ad: AugmentedAd) -> dict:
    """Wire document: the raw record fields followed by the derived fields."""
    doc = record_to_document(ad.base)
    for wire, attr in _DERIVED_KEYS:
        doc[wire] = _encode(getattr(ad, attr))
    return doc


def is_augmented_document(raw) -> bool:
    return isinstance(raw, dict) and "predicted_label" in raw


def parse_augmented_document(raw) -> AugmentedAd:
    """Inverse of :func:`augmented_to_document`."""
    base = parse_ad_record(raw)
    if raw.get("predicted_label") is None:
        raise InvalidValue("predicted_label", "missing on an augmented document")

    def opt(enum_cls, key):
        value = raw.get(key)
        return None if value is None else enum_cls.parse(value)

    try:
        values = {
            "predicted_label": AdClass.parse(raw["predicted_label"]),
            "rule_labels": frozenset(AdClass.parse(v) for v in raw.get("rule_labels") or ()),
            "strict_label": opt(AdClass, "strict_label"),
            "ad_subclass": frozenset(
                CreditSubclass.parse(v) for v in raw.get("ad_subClass") or ()
            ),
            "max_gender": opt(Gender, "max_genderDemographic"),
            "max_age": opt(AgeBucket, "max_ageDemographic"),
        }
    except ValueError as exc:
        raise InvalidValue("derived field", str(exc)) from None
    for wire, attr in _DERIVED_KEYS:
        if attr not in values and raw.get(wire) is not None:
            values[attr] = raw[wire]
    for attr in ("max_percentage",) + tuple(
        a for _, a in _DERIVED_KEYS if a.startswith("duration_")
    ):
        if values.get(attr) is not None:
            values[attr] = float(values[attr])
    return AugmentedAd(base=base, **values)
