import csv
import sqlite3
from datetime import date, datetime, timezone

import pytest

from adaudit.core import AdClass, AgeBucket, Gender
from adaudit.exceptions import StorageError
from adaudit.ingest import load_fixture
from adaudit.store import CSV_COLUMNS, AdFilter, AdStore

from _synth import make_ad, skewed_ad

M, F = Gender.MALE, Gender.FEMALE


@pytest.fixture
def store(tmp_path):
    with AdStore(tmp_path / "ads.db") as s:
        yield s


def mixed_ads():
    labels = [AdClass.CREDIT, AdClass.EMPLOYMENT, AdClass.HOUSING, AdClass.CREDIT, AdClass.OTHER]
    return [
        skewed_ad(f"a{i}", M if i % 2 else F, label=label, page_id=f"p{i}")
        for i, label in enumerate(labels)
    ]


def test_insert_and_upsert(store):
    ads = mixed_ads()[:3]
    assert store.insert_batch(ads) == 3
    assert store.insert_batch(ads[:1]) == 0
    assert store.count() == 3


def test_later_insert_replaces(store):
    store.insert_batch([skewed_ad("x", M, text="old")])
    store.insert_batch([skewed_ad("x", M, text="new")])
    [ad] = store.query()
    assert ad.base.body_text == "new"


def test_thousand_records(store):
    ads = [skewed_ad(f"id{i:04d}", M) for i in range(1000)]
    assert store.insert_batch(ads) == 1000
    assert store.count() == 1000
    assert sorted(a.archive_id for a in store.query()) == sorted(a.archive_id for a in ads)


def test_query_filters(store):
    store.insert_batch(mixed_ads())
    assert len(store.query(AdFilter())) == 5
    credit = store.query(AdFilter(ad_class=AdClass.CREDIT))
    assert [a.archive_id for a in credit] == ["a0", "a3"]
    assert [a.archive_id for a in store.query(AdFilter(page_id="p1"))] == ["a1"]
    males = store.query(AdFilter(gender_exclusive=M))
    assert males == []  # skewed ads reach both genders
    store.insert_batch([make_ad("only_m", [(AgeBucket.A25_34, M, 1.0)])])
    assert [a.archive_id for a in store.query(AdFilter(gender_exclusive=M))] == ["only_m"]


def test_query_by_start_year(store):
    counts = {2018: 4, 2019: 7, 2020: 3}
    ads = []
    for year, n in counts.items():
        for i in range(n):
            start = datetime(year, 1 + i % 12, 1, 12, tzinfo=timezone.utc)
            ads.append(skewed_ad(f"{year}-{i}", M, start=start))
    ads.append(skewed_ad("edge", M, start=datetime(2019, 12, 31, 23, 59, tzinfo=timezone.utc)))
    store.insert_batch(ads)
    got = store.query(AdFilter(start_from=date(2019, 1, 1), start_until=date(2019, 12, 31)))
    assert len(got) == counts[2019] + 1
    assert all(a.base.delivery_start.year == 2019 for a in got)
    starts = [(a.base.delivery_start, a.archive_id) for a in got]
    assert starts == sorted(starts)


def test_export_jsonl_roundtrip(store, tmp_path):
    ads = mixed_ads()
    store.insert_batch(ads)
    path = tmp_path / "out.jsonl"
    assert store.export(AdFilter(), path, "jsonl") == 5
    assert {r.archive_id: r for r in load_fixture(path)} == {a.archive_id: a.base for a in ads}
    with AdStore(tmp_path / "copy.db") as other:
        assert other.import_fixture(path) == 5
        assert other.query() == store.query()


def test_export_csv(store, tmp_path):
    store.insert_batch(mixed_ads())
    path = tmp_path / "emp.csv"
    assert store.export(AdFilter(ad_class=AdClass.EMPLOYMENT), path, "csv") == 1
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[0][:3] == ["archiveID", "ad_creation_time", "text"]
    # one row per demographic observation
    assert len(rows) == 3
    assert {r[0] for r in rows[1:]} == {"a1"}
    assert {r[CSV_COLUMNS.index("strict_label")] for r in rows[1:]} == {"employment"}


def test_export_empty_csv(store, tmp_path):
    path = tmp_path / "none.csv"
    assert store.export(AdFilter(ad_class=AdClass.POLITICAL), path, "csv") == 0
    assert path.read_text().splitlines() == [",".join(CSV_COLUMNS)]


def test_raw_and_query_log(store):
    from adaudit.core import QueryLogEntry

    ad = skewed_ad("r1", M)
    assert store.insert_raw([ad.base, ad.base]) == 1
    assert store.raw_records() == [ad.base]
    entry = QueryLogEntry("jobs", datetime(2020, 1, 1, tzinfo=timezone.utc), 5)
    store.log_queries([entry])
    assert store.query_log() == [entry]


def test_version_mismatch(tmp_path):
    path = tmp_path / "v.db"
    conn = sqlite3.connect(path)
    conn.execute("PRAGMA user_version = 42")
    conn.close()
    with pytest.raises(StorageError):
        AdStore(path)


def test_not_a_database(tmp_path):
    path = tmp_path / "junk.db"
    path.write_text("definitely not sqlite " * 100)
    with pytest.raises(StorageError):
        AdStore(path)
