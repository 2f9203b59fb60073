"""Single-file SQLite store for raw and augmented ads.

``archive_id`` is the only key.  Each augmented ad is stored as its wire
document, with a few columns pulled out for filtering and ordering.
"""

from __future__ import annotations

import csv
import json
import sqlite3
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path
from typing import Optional

from .analytics import exclusive_gender
from .augment import (
    DERIVED_FIELD_NAMES,
    augmented_to_document,
    is_augmented_document,
    parse_augmented_document,
)
from .core import AdClass, Gender, QueryLogEntry, parse_ad_record, record_to_document
from .exceptions import StorageError

STORE_VERSION = 1

#: CSV export columns: raw fields, one demographic observation, derived fields.
CSV_COLUMNS = (
    "archiveID",
    "ad_creation_time",
    "text",
    "url_caption",
    "url_description",
    "url_title",
    "ad_delivery_start_time",
    "ad_delivery_stop_time",
    "embedded_url",
    "currency",
    "funding_entity",
    "impressions",
    "potential_reach",
    "page_id",
    "page_name",
    "publisher_platforms",
    "region_distribution",
    "spend",
    "age",
    "gender",
    "percentage_demographic",
) + DERIVED_FIELD_NAMES

_SCHEMA = """
CREATE TABLE IF NOT EXISTS raw_ads (
    archive_id TEXT PRIMARY KEY,
    doc TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS ads (
    archive_id TEXT PRIMARY KEY,
    strict_label TEXT,
    predicted_label TEXT NOT NULL,
    delivery_start_us INTEGER NOT NULL,
    page_id TEXT NOT NULL,
    exclusive_gender TEXT,
    doc TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS ads_order ON ads (delivery_start_us, archive_id);
CREATE TABLE IF NOT EXISTS query_log (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    search_term_or_page TEXT NOT NULL,
    requested_at TEXT NOT NULL,
    record_count INTEGER NOT NULL
);
"""

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def _micros(ts: datetime) -> int:
    delta = ts - _EPOCH
    return (delta.days * 86400 + delta.seconds) * 1_000_000 + delta.microseconds


def _dumps(doc) -> str:
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))


@dataclass(frozen=True)
class AdFilter:
    """Conjunction of optional constraints; the empty filter matches everything.

    ``start_from``/``start_until`` bound ``delivery_start`` inclusively.  A
    bare :class:`date` as the upper bound covers that whole day.
    """

    ad_class: Optional[AdClass] = None
    start_from: Optional[object] = None
    start_until: Optional[object] = None
    page_id: Optional[str] = None
    gender_exclusive: Optional[Gender] = None


def _lower_bound_us(value) -> int:
    if isinstance(value, datetime):
        return _micros(value)
    return _micros(datetime.combine(value, time(), tzinfo=timezone.utc))


def _upper_bound_us(value) -> int:
    """Exclusive upper bound in microseconds."""
    if isinstance(value, datetime):
        return _micros(value) + 1
    return _micros(datetime.combine(value + timedelta(days=1), time(), tzinfo=timezone.utc))


class AdStore:
    """Embedded store; one writer, many readers.

    Use as a context manager or call :meth:`close`.
    """

    def __init__(self, path):
        self.path = str(path)
        try:
            self._conn = sqlite3.connect(self.path)
            version = self._conn.execute("PRAGMA user_version").fetchone()[0]
            if version not in (0, STORE_VERSION):
                raise StorageError(
                    f"{self.path}: store version {version} is not supported "
                    f"(expected {STORE_VERSION})"
                )
            with self._conn:
                self._conn.executescript(_SCHEMA)
                self._conn.execute(f"PRAGMA user_version = {STORE_VERSION}")
        except sqlite3.Error as exc:
            raise StorageError(f"{self.path}: {exc}") from exc

    def close(self):
        self._conn.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _execute_many(self, sql, rows):
        try:
            with self._conn:
                self._conn.executemany(sql, rows)
        except sqlite3.Error as exc:
            raise StorageError(str(exc)) from exc

    def _existing(self, table, ids):
        found = set()
        ids = list(ids)
        for i in range(0, len(ids), 500):
            chunk = ids[i : i + 500]
            marks = ",".join("?" * len(chunk))
            rows = self._conn.execute(
                f"SELECT archive_id FROM {table} WHERE archive_id IN ({marks})", chunk
            )
            found.update(r[0] for r in rows)
        return found

    # --- raw ads ------------------------------------------------------------

    def insert_raw(self, records) -> int:
        """Upsert raw records; returns how many archive ids were new."""
        latest = {r.archive_id: r for r in records}
        new = len(set(latest) - self._existing("raw_ads", latest))
        self._execute_many(
            "INSERT OR REPLACE INTO raw_ads (archive_id, doc) VALUES (?, ?)",
            [(k, _dumps(record_to_document(r))) for k, r in latest.items()],
        )
        return new

    def raw_records(self):
        rows = self._conn.execute("SELECT doc FROM raw_ads ORDER BY archive_id")
        return [parse_ad_record(json.loads(doc)) for (doc,) in rows]

    # --- augmented ads ----------------------------------------------------------

    def insert_batch(self, records) -> int:
        """Upsert augmented ads keyed by archive id (later wins); returns new keys."""
        latest = {ad.archive_id: ad for ad in records}
        new = len(set(latest) - self._existing("ads", latest))
        rows = []
        for key, ad in latest.items():
            excl = exclusive_gender(ad)
            rows.append(
                (
                    key,
                    None if ad.strict_label is None else ad.strict_label.value,
                    ad.predicted_label.value,
                    _micros(ad.base.delivery_start),
                    ad.base.page_id,
                    None if excl is None else excl.value,
                    _dumps(augmented_to_document(ad)),
                )
            )
        self._execute_many(
            "INSERT OR REPLACE INTO ads (archive_id, strict_label, predicted_label, "
            "delivery_start_us, page_id, exclusive_gender, doc) VALUES (?, ?, ?, ?, ?, ?, ?)",
            rows,
        )
        return new

    def count(self) -> int:
        return self._conn.execute("SELECT COUNT(*) FROM ads").fetchone()[0]

    def _select_docs(self, flt: AdFilter):
        clauses, params = [], []
        if flt.ad_class is not None:
            clauses.append("strict_label = ?")
            params.append(AdClass.parse(flt.ad_class).value)
        if flt.start_from is not None:
            clauses.append("delivery_start_us >= ?")
            params.append(_lower_bound_us(flt.start_from))
        if flt.start_until is not None:
            clauses.append("delivery_start_us < ?")
            params.append(_upper_bound_us(flt.start_until))
        if flt.page_id is not None:
            clauses.append("page_id = ?")
            params.append(flt.page_id)
        if flt.gender_exclusive is not None:
            clauses.append("exclusive_gender = ?")
            params.append(Gender.parse(flt.gender_exclusive).value)
        where = f"WHERE {' AND '.join(clauses)}" if clauses else ""
        sql = f"SELECT doc FROM ads {where} ORDER BY delivery_start_us, archive_id"
        try:
            # one statement = one read transaction, so no torn results
            return [json.loads(doc) for (doc,) in self._conn.execute(sql, params).fetchall()]
        except sqlite3.Error as exc:
            raise StorageError(str(exc)) from exc

    def query(self, flt: AdFilter = AdFilter()) -> list:
        """Matching ads ordered by (delivery_start, archive_id)."""
        return [parse_augmented_document(doc) for doc in self._select_docs(flt)]

    # --- query log ------------------------------------------------------------------

    def log_queries(self, entries):
        self._execute_many(
            "INSERT INTO query_log (search_term_or_page, requested_at, record_count) "
            "VALUES (?, ?, ?)",
            [(e.search_term_or_page, e.requested_at.isoformat(), e.record_count) for e in entries],
        )

    def query_log(self):
        rows = self._conn.execute(
            "SELECT search_term_or_page, requested_at, record_count FROM query_log ORDER BY id"
        )
        return [QueryLogEntry(t, datetime.fromisoformat(at), n) for t, at, n in rows]

    # --- export / import ------------------------------------------------------------------

    def export(self, flt: AdFilter, path, fmt="jsonl") -> int:
        """Write matching ads to ``path``; returns the number of ads written.

        ``jsonl`` writes one augmented wire document per line.  ``csv``
        writes one row per demographic observation (an ad with no
        distribution still gets one row), nested fields as compact JSON.
        """
        docs = self._select_docs(flt)
        try:
            if fmt in ("jsonl", "fixture-lines"):
                with open(path, "w", encoding="utf-8") as fh:
                    for doc in docs:
                        fh.write(_dumps(doc) + "\n")
            elif fmt == "csv":
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow(CSV_COLUMNS)
                    for doc in docs:
                        writer.writerows(_csv_rows(doc))
            else:
                raise ValueError(f"unknown export format {fmt!r}")
        except OSError as exc:
            raise StorageError(f"cannot write {path}: {exc}") from exc
        return len(docs)

    def import_fixture(self, path) -> int:
        """Load an exported ``jsonl`` file; augmented lines go to ``ads``, others to ``raw_ads``."""
        from .ingest import iter_fixture_lines

        augmented, raw = [], []
        for _, doc in iter_fixture_lines(path):
            if is_augmented_document(doc):
                augmented.append(parse_augmented_document(doc))
            else:
                raw.append(parse_ad_record(doc))
        return self.insert_batch(augmented) + self.insert_raw(raw)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (dict, list)):
        return json.dumps(value, ensure_ascii=False, separators=(",", ":"), sort_keys=True)
    return value


def _csv_rows(doc):
    cells = doc.get("demographic_distribution") or [None]
    for cell in cells:
        row = []
        for col in CSV_COLUMNS:
            if col in ("age", "gender"):
                row.append("" if cell is None else cell[col])
            elif col == "percentage_demographic":
                row.append("" if cell is None else cell["percentage"])
            else:
                row.append(_cell(doc.get(col)))
        yield row

