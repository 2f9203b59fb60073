from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaudit.core import (
    AdClass,
    AgeBucket,
    DemographicShare,
    Gender,
    normalize_demographics,
    parse_ad_record,
    parse_timestamp,
    record_to_document,
)
from adaudit.exceptions import DuplicateCell, InvalidValue, InvariantViolation, MissingField

from _synth import ad_doc


def test_minimal_record():
    rec = parse_ad_record(
        {
            "archiveID": "1",
            "ad_creation_time": "2019-10-01T00:00:00Z",
            "ad_delivery_start_time": "2019-10-02T00:00:00Z",
            "demographic_distribution": [{"age": "25-34", "gender": "female", "percentage": "1.0"}],
        }
    )
    assert rec.archive_id == "1"
    assert rec.demographic_distribution == (DemographicShare(AgeBucket.A25_34, Gender.FEMALE, 1.0),)
    assert rec.delivery_stop is None
    assert rec.embedded_url is None


def test_missing_archive_id():
    doc = ad_doc("1")
    del doc["archiveID"]
    with pytest.raises(MissingField) as err:
        parse_ad_record(doc)
    assert err.value.name == "archive_id"


@pytest.mark.parametrize("key", ["ad_creation_time", "ad_delivery_start_time"])
def test_missing_timestamps(key):
    doc = ad_doc("1")
    del doc[key]
    with pytest.raises(MissingField):
        parse_ad_record(doc)


def test_fraction_sum_above_tolerance():
    doc = ad_doc("1", cells=[("25-34", "female", "0.55"), ("25-34", "male", "0.5")])
    with pytest.raises(InvariantViolation):
        parse_ad_record(doc)


def test_fraction_sum_within_tolerance():
    doc = ad_doc("1", cells=[("25-34", "female", "0.505"), ("25-34", "male", "0.505")])
    assert len(parse_ad_record(doc).demographic_distribution) == 2


def test_duplicate_cell_rejected():
    doc = ad_doc("1", cells=[("25-34", "female", "0.4"), ("25-34", "Female", "0.4")])
    with pytest.raises(InvariantViolation):
        parse_ad_record(doc)


def test_stop_before_start():
    doc = ad_doc("1", ad_delivery_stop_time="2019-09-30T00:00:00+0000")
    with pytest.raises(InvariantViolation):
        parse_ad_record(doc)


@pytest.mark.parametrize(
    "field,value",
    [
        ("ad_creation_time", "2019-10-01T00:00:00"),  # no offset
        ("ad_creation_time", "yesterday"),
        ("impressions", {"lower_bound": "abc"}),
        ("impressions", {"lower_bound": "10", "upper_bound": "5"}),
        ("currency", "dollars"),
    ],
)
def test_invalid_values(field, value):
    with pytest.raises(InvalidValue):
        parse_ad_record(ad_doc("1", **{field: value}))


def test_invalid_age_and_percentage():
    with pytest.raises(InvalidValue):
        parse_ad_record(ad_doc("1", cells=[("all", "female", "1.0")]))
    with pytest.raises(InvalidValue):
        parse_ad_record(ad_doc("1", cells=[("25-34", "female", "1.5")]))
    with pytest.raises(InvalidValue):
        parse_ad_record(ad_doc("1", cells=[("25-34", "female", "lots")]))


def test_gender_mapping():
    assert Gender.from_wire("MALE") is Gender.MALE
    assert Gender.from_wire("Female") is Gender.FEMALE
    for other in ("unknown", "custom", "", "nonbinary"):
        assert Gender.from_wire(other) is Gender.UNKNOWN


def test_timestamp_offsets_normalize_to_utc():
    a = parse_timestamp("2020-01-01T05:00:00+05:00", "t")
    b = parse_timestamp("2020-01-01T00:00:00+0000", "t")
    c = parse_timestamp("2020-01-01T00:00:00Z", "t")
    assert a == b == c
    assert a.tzinfo == timezone.utc


def test_unknown_keys_ignored_and_spend_in_cents():
    rec = parse_ad_record(ad_doc("1", surprise="x", spend={"lower_bound": "100", "upper_bound": "199.5"}))
    assert rec.spend.lower == 10000
    assert rec.spend.upper == 19950
    assert rec.spend.currency == "USD"


def test_class_order_is_alphabetical():
    assert sorted(AdClass, key=lambda c: c.value) == list(AdClass)
    assert AdClass.CREDIT < AdClass.EMPLOYMENT < AdClass.HOUSING < AdClass.OTHER < AdClass.POLITICAL
    assert len(AdClass) == 5
    assert len(AgeBucket) == 7


# --- normalize_demographics -------------------------------------------------------


def test_normalize_empty():
    cells = normalize_demographics([])
    assert len(cells) == 21
    assert all(c.fraction == 0 for c in cells)


def test_normalize_single_cell():
    cells = normalize_demographics([DemographicShare(AgeBucket.A25_34, Gender.FEMALE, 1.0)])
    assert len(cells) == 21
    hot = [c for c in cells if c.fraction]
    assert hot == [DemographicShare(AgeBucket.A25_34, Gender.FEMALE, 1.0)]
    assert [c.cell for c in cells] == sorted(c.cell for c in cells)


def test_normalize_duplicate():
    with pytest.raises(DuplicateCell):
        normalize_demographics(
            [
                DemographicShare(AgeBucket.A18_24, Gender.MALE, 0.4),
                DemographicShare(AgeBucket.A18_24, Gender.MALE, 0.6),
            ]
        )


cell_lists = st.lists(
    st.tuples(
        st.sampled_from(list(AgeBucket)),
        st.sampled_from(list(Gender)),
        st.floats(0, 1 / 21, allow_nan=False),
    ),
    unique_by=lambda t: (t[0], t[1]),
    max_size=21,
).map(lambda xs: [DemographicShare(*x) for x in xs])


@given(cell_lists)
def test_normalize_idempotent_and_sum_preserving(shares):
    once = normalize_demographics(shares)
    assert normalize_demographics(once) == once
    assert sorted(c.fraction for c in once if c.fraction) == sorted(
        s.fraction for s in shares if s.fraction
    )
    assert sum(sorted(c.fraction for c in once)) == sum(sorted(s.fraction for s in shares))


# --- round trip -------------------------------------------------------------------------

text_st = st.text(max_size=40)
frac_st = st.decimals(min_value=0, max_value="0.047", places=4).map(str)


@st.composite
def wire_docs(draw):
    cells = draw(
        st.lists(
            st.tuples(st.sampled_from([a.value for a in AgeBucket]),
                      st.sampled_from(["male", "female", "unknown"]), frac_st),
            unique_by=lambda t: (t[0], t[1]),
            max_size=21,
        )
    )
    start = draw(st.datetimes(min_value=datetime(2016, 1, 1), max_value=datetime(2021, 1, 1)))
    stop = draw(st.none() | st.datetimes(min_value=start, max_value=datetime(2022, 1, 1)))
    lower = draw(st.integers(0, 10**6))
    extra = {
        "text": draw(text_st),
        "url_caption": draw(st.none() | text_st),
        "embedded_url": draw(st.none() | text_st),
        "funding_entity": draw(st.none() | text_st),
        "ad_delivery_start_time": start.isoformat() + "+00:00",
        "impressions": {"lower_bound": str(lower), "upper_bound": str(lower + draw(st.integers(0, 999)))},
        "potential_reach": draw(st.none() | st.just({"lower_bound": "5"})),
        "spend": {"lower_bound": draw(st.sampled_from(["0", "12.5", "100"]))},
        "publisher_platforms": draw(st.lists(st.sampled_from(["facebook", "instagram"]), unique=True)),
        "region_distribution": [{"region": "Ohio", "percentage": "0.5"}],
    }
    if stop is not None:
        extra["ad_delivery_stop_time"] = stop.isoformat() + "+00:00"
    return ad_doc(draw(st.text("abc0123", min_size=1, max_size=8)), cells=cells, **extra)


@settings(max_examples=150)
@given(wire_docs())
def test_roundtrip_through_fixture_format(doc):
    rec = parse_ad_record(doc)
    assert parse_ad_record(record_to_document(rec)) == rec
    # deterministic
    assert parse_ad_record(doc) == rec
