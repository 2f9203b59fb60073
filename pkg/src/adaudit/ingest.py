"""Retrieve ads from an Ad-Library-style endpoint or from saved fixtures.

Two sources share one interface, ``source.fetch(query, cursor)``, which
returns a :class:`RawPage`:

* :class:`FixtureSource` replays a line-delimited JSON file, filtering by
  search term (token-level phrase match on the ad text) or page id.
* :class:`HttpSource` issues paginated GET requests.

Records that fail to parse are reported next to the good ones and never
abort a page.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Iterator, NamedTuple, Optional

import requests

from .core import QueryLogEntry, parse_ad_record
from .exceptions import AuditError, InvalidValue, RateLimited, SourceError, TransportError
from .textproc import tokenize

log = logging.getLogger(__name__)

TOKEN_ENV_VAR = "AD_AUDIT_TOKEN"
DEFAULT_PAGE_SIZE = 1000
DEFAULT_PER_TERM_CAP = 2000
DEFAULT_REQUESTS_PER_MINUTE = 10

#: Fields requested from the endpoint, in Ad Library naming.
API_FIELDS = (
    "id",
    "ad_creation_time",
    "ad_creative_body",
    "ad_creative_link_caption",
    "ad_creative_link_description",
    "ad_creative_link_title",
    "ad_delivery_start_time",
    "ad_delivery_stop_time",
    "ad_snapshot_url",
    "currency",
    "funding_entity",
    "impressions",
    "potential_reach",
    "page_id",
    "page_name",
    "publisher_platforms",
    "region_distribution",
    "demographic_distribution",
    "spend",
)

# endpoint field name -> canonical fixture name
_API_RENAMES = {
    "id": "archiveID",
    "ad_creative_body": "text",
    "ad_creative_link_caption": "url_caption",
    "ad_creative_link_description": "url_description",
    "ad_creative_link_title": "url_title",
    "ad_snapshot_url": "embedded_url",
}

# Graph-style error codes that mean "slow down"
_THROTTLE_CODES = {4, 17, 32, 613}


class ActiveStatus(enum.Enum):
    ALL = "ALL"
    ACTIVE = "ACTIVE"
    INACTIVE = "INACTIVE"


@dataclass(frozen=True)
class AdQuery:
    search_term: Optional[str] = None
    page_ids: Optional[tuple] = None
    country: str = "US"
    active_status: ActiveStatus = ActiveStatus.ALL
    page_size: int = DEFAULT_PAGE_SIZE

    def __post_init__(self):
        if (self.search_term is None) == (self.page_ids is None):
            raise ValueError("exactly one of search_term / page_ids must be set")
        if self.search_term is not None and not self.search_term.strip():
            raise ValueError("search_term must be nonempty")
        if self.page_ids is not None:
            if not self.page_ids:
                raise ValueError("page_ids must be nonempty")
            object.__setattr__(self, "page_ids", tuple(str(p) for p in self.page_ids))
        if isinstance(self.page_size, bool) or not 1 <= self.page_size <= 1000:
            raise ValueError(f"page_size must be in [1, 1000], got {self.page_size!r}")

    @property
    def label(self) -> str:
        return self.search_term if self.search_term is not None else ",".join(self.page_ids)


@dataclass(frozen=True)
class ParseFailure:
    raw: object
    error: Exception
    line_number: Optional[int] = None

    def __str__(self):
        where = f"line {self.line_number}: " if self.line_number is not None else ""
        return f"{where}{self.error}"


class RawPage(NamedTuple):
    documents: list  # (line_number or None, decoded document or decode error)
    next_cursor: Optional[str]


class Page(NamedTuple):
    records: list
    next_cursor: Optional[str]
    failures: list


class TokenBucket:
    """Thread-safe token bucket.

    Holds at most ``capacity`` tokens and refills at ``rate_per_minute``.
    ``clock`` and ``sleep`` are injectable for tests.
    """

    def __init__(self, rate_per_minute=DEFAULT_REQUESTS_PER_MINUTE, capacity=None,
                 clock=time.monotonic, sleep=time.sleep):
        if rate_per_minute <= 0:
            raise ValueError("rate_per_minute must be positive")
        self.rate = rate_per_minute / 60.0
        self.capacity = float(capacity if capacity is not None else rate_per_minute)
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def _refill(self):
        now = self._clock()
        self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
        self._last = now

    def acquire(self):
        """Block until one token is available and take it."""
        while True:
            with self._lock:
                self._refill()
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            self._sleep(wait)


# --- fixtures -----------------------------------------------------------------------


def iter_fixture_lines(path) -> Iterator:
    """Yield ``(line_number, document)`` for every non-blank line.

    A leading byte-order mark is ignored.  Lines that are not valid JSON
    yield the raw text with an :class:`InvalidValue` instead of a dict;
    callers decide whether to skip them.
    """
    with open(path, encoding="utf-8-sig") as fh:
        for number, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                yield number, json.loads(text)
            except json.JSONDecodeError as exc:
                error = InvalidValue("line", f"malformed JSON: {exc.msg}")
                error.raw = text
                yield number, error


def _parse_line(number, doc):
    if isinstance(doc, Exception):
        return None, ParseFailure(getattr(doc, "raw", None), doc, number)
    try:
        return parse_ad_record(doc), None
    except AuditError as exc:
        return None, ParseFailure(doc, exc, number)


def load_fixture(path, errors=None) -> Iterator:
    """Lazily yield records from a fixture file in file order.

    Malformed lines are skipped; when ``errors`` is a list each one is
    appended to it as a :class:`ParseFailure` carrying its line number.
    """
    for number, doc in iter_fixture_lines(path):
        record, failure = _parse_line(number, doc)
        if failure is not None:
            log.warning("%s: %s", path, failure)
            if errors is not None:
                errors.append(failure)
            continue
        yield record


def _body_text(doc):
    text = doc.get("text", doc.get("ad_creative_body"))
    return text if isinstance(text, str) else ""


def _contains_phrase(tokens, phrase):
    n = len(phrase)
    return n > 0 and any(tokens[i : i + n] == phrase for i in range(len(tokens) - n + 1))


class FixtureSource:
    """Serve a saved fixture file as if it were the paginated endpoint.

    A line matches a keyword query when the term's tokens occur as a
    contiguous run in the tokenized ad text, and a page query when its
    ``page_id`` is listed.  Lines that are not JSON objects cannot be
    filtered and are served to every query so they get reported.  Cursors
    are line offsets into the matching set.
    """

    def __init__(self, path):
        self.path = path
        self._lines = list(iter_fixture_lines(path))

    def _matches(self, doc, query):
        if not isinstance(doc, dict):
            return True
        if query.page_ids is not None:
            return str(doc.get("page_id")) in query.page_ids
        return _contains_phrase(tokenize(_body_text(doc)), tokenize(query.search_term))

    def fetch(self, query: AdQuery, cursor: Optional[str] = None) -> RawPage:
        start = int(cursor) if cursor else 0
        matching = [(n, d) for n, d in self._lines if self._matches(d, query)]
        end = start + query.page_size
        chunk = matching[start:end]
        return RawPage(chunk, str(end) if end < len(matching) else None)


# --- HTTP --------------------------------------------------------------------------------


def _from_api_document(doc):
    if not isinstance(doc, dict):
        return doc
    return {_API_RENAMES.get(k, k): v for k, v in doc.items()}


class HttpSource:
    """GET-based client for an Ad Library style endpoint.

    The access token is read from ``AD_AUDIT_TOKEN`` unless passed in.
    """

    def __init__(self, endpoint_url, access_token=None, fields=API_FIELDS, timeout=30.0,
                 session=None):
        self.endpoint_url = endpoint_url
        self.access_token = access_token if access_token is not None else os.environ.get(TOKEN_ENV_VAR)
        self.fields = tuple(fields)
        self.timeout = timeout
        self.session = session or requests.Session()

    def params(self, query: AdQuery, cursor=None) -> dict:
        params = {
            "ad_reached_countries": query.country,
            "ad_active_status": query.active_status.value,
            "limit": str(query.page_size),
            "fields": ",".join(self.fields),
        }
        if query.search_term is not None:
            params["search_terms"] = query.search_term
        else:
            params["search_page_ids"] = ",".join(query.page_ids)
        if cursor:
            params["after"] = cursor
        if self.access_token:
            params["access_token"] = self.access_token
        return params

    def fetch(self, query: AdQuery, cursor: Optional[str] = None) -> RawPage:
        try:
            resp = self.session.get(
                self.endpoint_url, params=self.params(query, cursor), timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc

        try:
            body = resp.json()
        except ValueError:
            body = None
        error = body.get("error") if isinstance(body, dict) else None

        if resp.status_code == 429 or (
            isinstance(error, dict) and error.get("code") in _THROTTLE_CODES
        ):
            raise RateLimited(f"endpoint throttled the request (HTTP {resp.status_code})")
        if isinstance(error, dict):
            raise SourceError(error.get("code", resp.status_code), error.get("message", ""))
        if resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise SourceError(resp.status_code, resp.text[:200])
        if not isinstance(body, dict) or not isinstance(body.get("data"), list):
            raise SourceError(resp.status_code, "response has no data array")

        data = body["data"]
        after = (body.get("paging") or {}).get("cursors", {}).get("after")
        next_cursor = after if (after and data) else None
        return RawPage([(None, _from_api_document(d)) for d in data], next_cursor)


# --- operations ----------------------------------------------------------------------------


def fetch_page(source, query: AdQuery, cursor: Optional[str] = None) -> Page:
    """Fetch one page and parse it; bad records go to ``failures``."""
    raw = source.fetch(query, cursor)
    records, failures = [], []
    for number, doc in raw.documents:
        record, failure = _parse_line(number, doc)
        if failure is None:
            records.append(record)
        else:
            failures.append(failure)
    return Page(records, raw.next_cursor, failures)


def _with_backoff(call, sleep, max_attempts=5, base=1.0, factor=2.0):
    """Retry ``call`` on RateLimited/TransportError with exponential backoff."""
    delay = base
    for attempt in range(1, max_attempts + 1):
        try:
            return call()
        except (RateLimited, TransportError) as exc:
            if attempt == max_attempts:
                raise
            log.info("attempt %d failed (%s); retrying in %.1fs", attempt, exc, delay)
            sleep(delay)
            delay *= factor


class CrawlResult(NamedTuple):
    records: list
    log: list
    failures: list


def run_keyword_crawl(source, terms, per_term_cap=DEFAULT_PER_TERM_CAP, *,
                      template: AdQuery = None, limiter: TokenBucket = None,
                      sleep=time.sleep, max_attempts=5, now=None) -> CrawlResult:
    """Crawl every term up to ``per_term_cap`` records each.

    Records are deduplicated by archive id across terms (first seen wins)
    and one :class:`QueryLogEntry` is written per attempted term, even when
    the term fails.  Errors propagate with ``partial_result`` attached.  ``template`` supplies country, status and page size.
    """
    if isinstance(per_term_cap, bool) or per_term_cap < 1:
        raise ValueError("per_term_cap must be >= 1")
    terms = list(terms)
    if any(not isinstance(t, str) or not t.strip() for t in terms):
        raise ValueError("search terms must be nonempty strings")
    template = template or AdQuery(search_term="_")
    now = now or (lambda: datetime.now(timezone.utc))

    seen = set()
    records, entries, failures = [], [], []
    try:
        for term in terms:
            requested_at = now()
            fetched = 0
            cursor = None
            try:
                while fetched < per_term_cap:
                    query = replace(
                        template,
                        search_term=term,
                        page_ids=None,
                        page_size=min(template.page_size, per_term_cap - fetched),
                    )

                    def call(query=query, cursor=cursor):
                        if limiter is not None:
                            limiter.acquire()
                        return fetch_page(source, query, cursor)

                    page = _with_backoff(call, sleep, max_attempts)
                    failures.extend(page.failures)
                    for record in page.records[: per_term_cap - fetched]:
                        fetched += 1
                        if record.archive_id not in seen:
                            seen.add(record.archive_id)
                            records.append(record)
                    if page.next_cursor is None or not (page.records or page.failures):
                        break
                    cursor = page.next_cursor
            finally:
                entries.append(QueryLogEntry(term, requested_at, fetched))
    except AuditError as exc:
        # the partial result, including the log for every attempted term
        exc.partial_result = CrawlResult(records, entries, failures)
        raise
    return CrawlResult(records, entries, failures)
