"""Domain types for ad records and their demographic distributions.

Records arrive as decoded JSON documents using the Ad Library field names
(``archiveID``, ``ad_delivery_start_time``, ...).  :func:`parse_ad_record`
validates one document into an immutable :class:`AdRecord`, and
:func:`record_to_document` writes it back in the same wire shape so that
``parse_ad_record(record_to_document(r)) == r``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from typing import Any, Iterable, Mapping, Optional

from .exceptions import (
    DuplicateCell,
    InvalidValue,
    InvariantViolation,
    MissingField,
)

#: Upper tolerance on the sum of an ad's demographic fractions.
DEMOGRAPHIC_SUM_TOLERANCE = Decimal("1.01")


class _OrderedEnum(enum.Enum):
    """Enum whose members compare by declaration order."""

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"{value!r} is not a valid {cls.__name__}")

    @property
    def rank(self) -> int:
        return list(type(self)).index(self)

    def __lt__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.rank >= other.rank

    def __str__(self):
        return self.value


class AdClass(_OrderedEnum):
    # declaration order is the tie-break order
    CREDIT = "credit"
    EMPLOYMENT = "employment"
    HOUSING = "housing"
    OTHER = "other"
    POLITICAL = "political"


class CreditSubclass(_OrderedEnum):
    STUDENT_LOAN = "student_loan"
    DEBT_RELIEF = "debt_relief"
    AUTO_LOAN = "auto_loan"
    HOME_LOAN_OR_MORTGAGE = "home_loan_or_mortgage"
    OTHER_CREDIT = "other_credit"


class Gender(_OrderedEnum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"

    @classmethod
    def from_wire(cls, value: str) -> "Gender":
        key = str(value).strip().lower()
        if key == "male":
            return cls.MALE
        if key == "female":
            return cls.FEMALE
        return cls.UNKNOWN


class AgeBucket(_OrderedEnum):
    A13_17 = "13-17"
    A18_24 = "18-24"
    A25_34 = "25-34"
    A35_44 = "35-44"
    A45_54 = "45-54"
    A55_64 = "55-64"
    A65_PLUS = "65+"

    @classmethod
    def from_wire(cls, value: str) -> "AgeBucket":
        key = re.sub(r"\s+", "", str(value))
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unsupported age bucket {value!r}")


@dataclass(frozen=True)
class DemographicShare:
    age: AgeBucket
    gender: Gender
    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise InvalidValue("percentage", f"{self.fraction} outside [0, 1]")

    @property
    def cell(self):
        return (self.age, self.gender)


@dataclass(frozen=True)
class RegionShare:
    region: str
    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise InvalidValue("region_distribution", f"{self.fraction} outside [0, 1]")


@dataclass(frozen=True)
class CountRange:
    lower: int
    upper: Optional[int] = None

    def __post_init__(self):
        if self.lower < 0 or (self.upper is not None and self.upper < self.lower):
            raise InvariantViolation(f"bad count range [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class MoneyRange:
    """Spend bounds in currency minor units (cents for USD)."""

    lower: int
    upper: Optional[int] = None
    currency: Optional[str] = None

    def __post_init__(self):
        if self.lower < 0 or (self.upper is not None and self.upper < self.lower):
            raise InvariantViolation(f"bad money range [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class AdRecord:
    archive_id: str
    creation_time: datetime
    delivery_start: datetime
    body_text: str = ""
    url_caption: Optional[str] = None
    url_description: Optional[str] = None
    url_title: Optional[str] = None
    delivery_stop: Optional[datetime] = None
    embedded_url: Optional[str] = None
    currency: Optional[str] = None
    funding_entity: Optional[str] = None
    impressions: CountRange = CountRange(0)
    potential_reach: Optional[CountRange] = None
    page_id: str = ""
    page_name: str = ""
    publisher_platforms: frozenset = frozenset()
    region_distribution: tuple = ()
    demographic_distribution: tuple = ()
    spend: MoneyRange = field(default_factory=lambda: MoneyRange(0))

    def __post_init__(self):
        if not self.archive_id:
            raise InvariantViolation("archive_id must be nonempty")
        if self.delivery_stop is not None and self.delivery_stop < self.delivery_start:
            raise InvariantViolation(
                f"ad {self.archive_id}: delivery stop precedes delivery start"
            )
        seen = set()
        for share in self.demographic_distribution:
            if share.cell in seen:
                raise InvariantViolation(
                    f"ad {self.archive_id}: duplicate demographic cell "
                    f"({share.age.value}, {share.gender.value})"
                )
            seen.add(share.cell)
        total = sum(Decimal(repr(s.fraction)) for s in self.demographic_distribution)
        if total > DEMOGRAPHIC_SUM_TOLERANCE:
            raise InvariantViolation(
                f"ad {self.archive_id}: demographic fractions sum to {total}"
            )


@dataclass(frozen=True)
class QueryLogEntry:
    search_term_or_page: str
    requested_at: datetime
    record_count: int

    def __post_init__(self):
        if not self.search_term_or_page:
            raise InvalidValue("search_term_or_page", "must be nonempty")
        if self.record_count < 0:
            raise InvalidValue("record_count", "must be non-negative")


# --- parsing helpers ----------------------------------------------------------

_ARCHIVE_ID_KEYS = ("archiveID", "archive_id", "ad_archive_id", "id")
_OFFSET_RE = re.compile(r"(Z|[+-]\d{2}:?\d{2})$")


def parse_timestamp(value: Any, name: str) -> datetime:
    """Parse an ISO-8601 timestamp that carries an explicit UTC offset."""
    if isinstance(value, datetime):
        if value.tzinfo is None:
            raise InvalidValue(name, "timestamp has no UTC offset")
        return value.astimezone(timezone.utc)
    if not isinstance(value, str):
        raise InvalidValue(name, f"expected a string, got {type(value).__name__}")
    text = value.strip()
    m = _OFFSET_RE.search(text)
    if m is None:
        raise InvalidValue(name, f"timestamp {value!r} has no UTC offset")
    offset = m.group(1)
    if offset == "Z":
        offset = "+00:00"
    elif ":" not in offset:
        offset = offset[:3] + ":" + offset[3:]
    text = text[: m.start()] + offset
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError as exc:
        raise InvalidValue(name, str(exc)) from None
    return parsed.astimezone(timezone.utc)


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).isoformat()


def _parse_decimal(value: Any, name: str) -> Decimal:
    if isinstance(value, bool) or value is None:
        raise InvalidValue(name, f"not a number: {value!r}")
    try:
        result = Decimal(str(value).strip())
    except InvalidOperation:
        raise InvalidValue(name, f"not a number: {value!r}") from None
    if not result.is_finite():
        raise InvalidValue(name, f"not finite: {value!r}")
    return result


def _parse_fraction(value: Any, name: str) -> Decimal:
    result = _parse_decimal(value, name)
    if not 0 <= result <= 1:
        raise InvalidValue(name, f"{value!r} outside [0, 1]")
    return result


def _parse_int(value: Any, name: str) -> int:
    result = _parse_decimal(value, name)
    if result != result.to_integral_value() or result < 0:
        raise InvalidValue(name, f"expected a non-negative integer, got {value!r}")
    return int(result)


def _optional_str(raw: Mapping, key: str) -> Optional[str]:
    value = raw.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise InvalidValue(key, "expected a string")
    return value


def _parse_count_range(value: Any, name: str) -> CountRange:
    if not isinstance(value, Mapping):
        raise InvalidValue(name, "expected an object with lower_bound/upper_bound")
    lower = _parse_int(value.get("lower_bound", 0), name)
    upper = value.get("upper_bound")
    upper = None if upper is None else _parse_int(upper, name)
    if upper is not None and upper < lower:
        raise InvalidValue(name, "upper_bound below lower_bound")
    return CountRange(lower, upper)


def _to_minor_units(value: Any, name: str) -> int:
    amount = _parse_decimal(value, name) * 100
    if amount < 0 or amount != amount.to_integral_value():
        raise InvalidValue(name, f"not a non-negative amount in cents: {value!r}")
    return int(amount)


def _from_minor_units(amount: int) -> str:
    whole, cents = divmod(amount, 100)
    return str(whole) if cents == 0 else f"{whole}.{cents:02d}"


def _parse_currency(value: Any) -> Optional[str]:
    if value is None:
        return None
    if not isinstance(value, str) or not re.fullmatch(r"[A-Za-z]{3}", value.strip()):
        raise InvalidValue("currency", f"not an ISO-4217 code: {value!r}")
    return value.strip().upper()


def _parse_demographics(value: Any) -> tuple:
    if value is None:
        return ()
    if not isinstance(value, list):
        raise InvalidValue("demographic_distribution", "expected an array")
    shares = []
    for cell in value:
        if not isinstance(cell, Mapping):
            raise InvalidValue("demographic_distribution", "expected objects")
        for key in ("age", "gender", "percentage"):
            if key not in cell:
                raise MissingField(f"demographic_distribution.{key}")
        try:
            age = AgeBucket.from_wire(cell["age"])
        except ValueError as exc:
            raise InvalidValue("age", str(exc)) from None
        gender = Gender.from_wire(cell["gender"])
        fraction = _parse_fraction(cell["percentage"], "percentage")
        shares.append((age, gender, fraction))
    total = sum((f for _, _, f in shares), Decimal(0))
    if total > DEMOGRAPHIC_SUM_TOLERANCE:
        raise InvariantViolation(f"demographic fractions sum to {total} > 1.01")
    return tuple(DemographicShare(a, g, float(f)) for a, g, f in shares)


def _parse_regions(value: Any) -> tuple:
    if value is None:
        return ()
    if not isinstance(value, list):
        raise InvalidValue("region_distribution", "expected an array")
    out = []
    for cell in value:
        if not isinstance(cell, Mapping) or "region" not in cell:
            raise InvalidValue("region_distribution", "expected {region, percentage}")
        frac = _parse_fraction(cell.get("percentage"), "region_distribution.percentage")
        out.append(RegionShare(str(cell["region"]), float(frac)))
    return tuple(out)


def parse_ad_record(raw: Mapping[str, Any]) -> AdRecord:
    """Validate one decoded wire document into an :class:`AdRecord`.

    Unknown keys are ignored and absent optional fields become ``None``.

    Raises
    ------
    MissingField
        A required field (archive id, creation or delivery start time) is absent.
    InvalidValue
        A timestamp, fraction, range or enumeration could not be parsed.
    InvariantViolation
        The parsed values break a record invariant (ordering of delivery
        times, duplicate demographic cells, fraction sum above 1.01).
    """
    if not isinstance(raw, Mapping):
        raise InvalidValue("document", "expected a JSON object")

    archive_id = None
    for key in _ARCHIVE_ID_KEYS:
        if raw.get(key) not in (None, ""):
            archive_id = str(raw[key])
            break
    if archive_id is None:
        raise MissingField("archive_id")

    for key in ("ad_creation_time", "ad_delivery_start_time"):
        if raw.get(key) is None:
            raise MissingField(key)
    creation = parse_timestamp(raw["ad_creation_time"], "ad_creation_time")
    start = parse_timestamp(raw["ad_delivery_start_time"], "ad_delivery_start_time")
    stop = raw.get("ad_delivery_stop_time")
    stop = None if stop is None else parse_timestamp(stop, "ad_delivery_stop_time")

    body = raw.get("text", raw.get("ad_creative_body"))
    if body is not None and not isinstance(body, str):
        raise InvalidValue("text", "expected a string")

    currency = _parse_currency(raw.get("currency"))
    impressions = raw.get("impressions")
    impressions = CountRange(0) if impressions is None else _parse_count_range(impressions, "impressions")
    reach = raw.get("potential_reach")
    reach = None if reach is None else _parse_count_range(reach, "potential_reach")

    spend_raw = raw.get("spend")
    if spend_raw is None:
        spend = MoneyRange(0, None, currency)
    elif isinstance(spend_raw, Mapping):
        lower = _to_minor_units(spend_raw.get("lower_bound", 0), "spend")
        upper = spend_raw.get("upper_bound")
        upper = None if upper is None else _to_minor_units(upper, "spend")
        if upper is not None and upper < lower:
            raise InvalidValue("spend", "upper_bound below lower_bound")
        spend = MoneyRange(lower, upper, currency)
    else:
        raise InvalidValue("spend", "expected an object with lower_bound/upper_bound")

    platforms = raw.get("publisher_platforms") or []
    if not isinstance(platforms, list) or not all(isinstance(p, str) for p in platforms):
        raise InvalidValue("publisher_platforms", "expected an array of strings")

    page_id = raw.get("page_id")
    page_name = raw.get("page_name")

    return AdRecord(
        archive_id=archive_id,
        creation_time=creation,
        delivery_start=start,
        delivery_stop=stop,
        body_text=body or "",
        url_caption=_optional_str(raw, "url_caption"),
        url_description=_optional_str(raw, "url_description"),
        url_title=_optional_str(raw, "url_title"),
        embedded_url=_optional_str(raw, "embedded_url"),
        currency=currency,
        funding_entity=_optional_str(raw, "funding_entity"),
        impressions=impressions,
        potential_reach=reach,
        page_id="" if page_id is None else str(page_id),
        page_name="" if page_name is None else str(page_name),
        publisher_platforms=frozenset(platforms),
        region_distribution=_parse_regions(raw.get("region_distribution")),
        demographic_distribution=_parse_demographics(raw.get("demographic_distribution")),
        spend=spend,
    )


def _count_range_doc(value: CountRange) -> dict:
    doc = {"lower_bound": str(value.lower)}
    if value.upper is not None:
        doc["upper_bound"] = str(value.upper)
    return doc


def record_to_document(record: AdRecord) -> dict:
    """Inverse of :func:`parse_ad_record`, in Ad Library field order."""
    doc = {
        "archiveID": record.archive_id,
        "ad_creation_time": format_timestamp(record.creation_time),
        "text": record.body_text,
        "url_caption": record.url_caption,
        "url_description": record.url_description,
        "url_title": record.url_title,
        "ad_delivery_start_time": format_timestamp(record.delivery_start),
        "ad_delivery_stop_time": (
            None if record.delivery_stop is None else format_timestamp(record.delivery_stop)
        ),
        "embedded_url": record.embedded_url,
        "currency": record.currency,
        "funding_entity": record.funding_entity,
        "impressions": _count_range_doc(record.impressions),
        "potential_reach": (
            None if record.potential_reach is None else _count_range_doc(record.potential_reach)
        ),
        "page_id": record.page_id,
        "page_name": record.page_name,
        "publisher_platforms": sorted(record.publisher_platforms),
        "region_distribution": [
            {"region": r.region, "percentage": repr(r.fraction)}
            for r in record.region_distribution
        ],
        "demographic_distribution": [
            {"age": s.age.value, "gender": s.gender.value, "percentage": repr(s.fraction)}
            for s in record.demographic_distribution
        ],
    }
    spend = {"lower_bound": _from_minor_units(record.spend.lower)}
    if record.spend.upper is not None:
        spend["upper_bound"] = _from_minor_units(record.spend.upper)
    doc["spend"] = spend
    return doc


def normalize_demographics(shares: Iterable[DemographicShare]) -> list:
    """Expand a sparse distribution to all 21 (age, gender) cells.

    Absent cells get fraction 0; the result is sorted by (age, gender).
    """
    cells = {}
    for share in shares:
        if share.cell in cells:
            raise DuplicateCell(share.age, share.gender)
        cells[share.cell] = share.fraction
    return [
        DemographicShare(age, gender, cells.get((age, gender), 0.0))
        for age in AgeBucket
        for gender in Gender
    ]
