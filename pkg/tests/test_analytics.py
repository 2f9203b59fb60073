import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaudit.analytics import (
    ExclusiveAudienceStats,
    age_skew,
    avg_demographic_matrix,
    build_report,
    exclusive_audience,
    gender_skew,
    report_to_json,
    uniqueness_stats,
    write_report,
)
from adaudit.core import AdClass, AgeBucket, Gender
from adaudit.exceptions import EmptyInput

from _synth import make_ad, skewed_ad

M, F, U = Gender.MALE, Gender.FEMALE, Gender.UNKNOWN
A18, A25 = AgeBucket.A18_24, AgeBucket.A25_34


def test_gender_skew_all_female():
    ads = [skewed_ad(i, F) for i in range(10)]
    assert gender_skew(ads) == {M: 0.0, F: 1.0, U: 0.0}


def test_gender_skew_even():
    assert gender_skew([skewed_ad(1, M), skewed_ad(2, F)]) == {M: 0.5, F: 0.5, U: 0.0}


def test_gender_skew_empty():
    with pytest.raises(EmptyInput):
        gender_skew([])


def test_age_skew():
    ads = [skewed_ad(i, M, age=A25) for i in range(4)]
    skew = age_skew(ads)
    assert skew[A25] == 1.0 and sum(skew.values()) == 1.0
    two = age_skew([skewed_ad(1, M, age=A18), skewed_ad(2, M, age=A25)])
    assert two[A18] == two[A25] == 0.5


def test_duplicate_archive_ids_count_once():
    ads = [skewed_ad(1, M), skewed_ad(1, M), skewed_ad(2, F)]
    assert gender_skew(ads)[M] == 0.5


def test_exclusive_audience_rules():
    only_f = make_ad(1, [(A18, F, 0.5), (A25, F, 0.5)])
    almost_m = make_ad(2, [(A18, M, 0.999), (A25, U, 0.001)])
    zero_cell = make_ad(3, [(A18, M, 1.0), (A25, F, 0.0)])
    stats = exclusive_audience([only_f, almost_m, zero_cell])
    assert stats[F].campaign_count == 1
    assert stats[M].campaign_count == 1  # the zero female cell does not count
    assert stats[U] == ExclusiveAudienceStats()


def test_uniqueness():
    ads = [make_ad(i, [(A18, M, 1.0)], text="same text", page_id=f"p{i % 2}") for i in range(3)]
    u = uniqueness_stats(ads)
    assert u.unique_text_count == 1
    assert u.unique_url_count == 0
    assert u.advertiser_count == 2
    assert tuple(u) == (3, 2, 1, 0, 0)


def test_avg_matrix():
    one = avg_demographic_matrix([make_ad(1, [(A25, F, 1.0)])])
    assert one[(F, A25)] == 1.0
    assert sum(one.values()) == 1.0
    two = avg_demographic_matrix([make_ad(1, [(A18, M, 0.2)]), make_ad(2, [(A18, M, 0.4)])])
    assert two[(M, A18)] == pytest.approx(0.3, abs=1e-15)
    zeros = avg_demographic_matrix([make_ad(1, [(A18, M, 0.0)])])
    assert set(zeros.values()) == {0.0}
    with pytest.raises(EmptyInput):
        avg_demographic_matrix([])


cell_st = st.tuples(st.sampled_from(list(AgeBucket)), st.sampled_from(list(Gender)),
                    st.floats(0, 1 / 21))
ads_st = st.lists(
    st.lists(cell_st, unique_by=lambda c: c[:2], min_size=1, max_size=8), min_size=1, max_size=20
).map(lambda dists: [make_ad(i, d, page_id=f"p{i % 3}") for i, d in enumerate(dists)])


@settings(max_examples=60, deadline=None)
@given(ads_st, st.randoms())
def test_report_invariants(ads, rnd):
    g = gender_skew(ads)
    a = age_skew(ads)
    assert sum(g.values()) == pytest.approx(1.0, abs=1e-9)
    assert sum(a.values()) == pytest.approx(1.0, abs=1e-9)

    excl = exclusive_audience(ads)
    for gender in Gender:
        assert excl[gender].campaign_count <= len(ads)
        assert excl[gender].advertiser_count <= excl[gender].campaign_count
    total = sum(s.campaign_count for s in excl.values())
    assert total <= len(ads)

    avg = avg_demographic_matrix(ads)
    assert all(0 <= v <= 1 for v in avg.values())
    assert sum(avg.values()) <= 1.01

    shuffled = ads[:]
    rnd.shuffle(shuffled)
    assert report_to_json(build_report(shuffled)) == report_to_json(build_report(ads))


def test_build_report_groups_by_strict_label(tmp_path):
    ads = [
        skewed_ad(1, M, label=AdClass.CREDIT, text="a"),
        skewed_ad(2, F, label=AdClass.EMPLOYMENT),
        skewed_ad(3, F, label=AdClass.CREDIT, text="b"),
    ]
    report = build_report(ads)
    assert set(report.classes) == {AdClass.CREDIT, AdClass.EMPLOYMENT}
    credit = report.classes[AdClass.CREDIT]
    assert credit.gender_skew[M] == 0.5
    assert credit.uniqueness.unique_text_count == 2
    assert report.start_year_histogram == {2019: 3}

    paths = write_report(report, tmp_path)
    names = {p.name for p in paths}
    assert "credit_gender_skew.csv" in names and "report.json" in names
    assert (tmp_path / "credit_gender_skew.csv").read_text().splitlines() == [
        "gender,percent", "male,50.0", "female,50.0", "unknown,0.0",
    ]
    exclusive = (tmp_path / "credit_exclusive.csv").read_text().splitlines()
    assert exclusive[0] == ",Men,Women,Custom gender"
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["classes"]["credit"]["campaign_count"] == 2


def test_report_is_order_independent_and_byte_stable(tmp_path):
    ads = [skewed_ad(i, random.Random(i).choice([M, F])) for i in range(50)]
    a = write_report(build_report(ads), tmp_path / "a")
    b = write_report(build_report(list(reversed(ads))), tmp_path / "b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
