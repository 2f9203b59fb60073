"""``audit`` command line: ingest, train, eval, classify, augment, report, export."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import date, datetime, timezone
from pathlib import Path

from . import __version__
from .analytics import build_report, write_report
from .augment import augment_record, augmented_to_document
from .core import AdClass, QueryLogEntry
from .evaluation import filtered_precision, metrics, strict_filter, stratified_split
from .exceptions import AuditError
from .ingest import (
    DEFAULT_PAGE_SIZE,
    DEFAULT_PER_TERM_CAP,
    DEFAULT_REQUESTS_PER_MINUTE,
    TOKEN_ENV_VAR,
    AdQuery,
    FixtureSource,
    HttpSource,
    TokenBucket,
    fetch_page,
    load_fixture,
    run_keyword_crawl,
)
from .naive_bayes import load_model, predict, save_model, train
from .rules import classify_all, load_rules
from .store import AdFilter, AdStore
from .textproc import text_to_bow

log = logging.getLogger("adaudit")


class UsageError(Exception):
    pass


def _read_labeled(path):
    """Labeled corpus: JSON lines with ``text`` and ``label`` keys."""
    out = []
    with open(path, encoding="utf-8-sig") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                out.append((str(doc["text"]), AdClass.parse(doc["label"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise AuditError(f"{path}:{number}: bad labeled line ({exc})") from None
    return out


def _read_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _terms(values):
    terms = []
    for value in values or ():
        terms.extend(t.strip() for t in value.split(",") if t.strip())
    return terms


def _ad_class(value):
    if value is None:
        return None
    try:
        return AdClass.parse(value)
    except ValueError:
        raise UsageError(f"unknown class {value!r}") from None


# --- subcommands ----------------------------------------------------------------------


def cmd_ingest(args):
    config = _read_config(args.config)
    failures = []
    query_log = []
    if args.fixture:
        if args.terms or args.page_ids:
            source = FixtureSource(args.fixture)
            records, query_log, failures = _crawl(source, args, limiter=None)
        else:
            records = list(load_fixture(args.fixture, errors=failures))
    else:
        endpoint = args.endpoint or config.get("endpoint_url")
        if not endpoint:
            raise UsageError("ingest needs --fixture, --endpoint or endpoint_url in --config")
        token = os.environ.get(TOKEN_ENV_VAR) or config.get("access_token")
        source = HttpSource(endpoint, access_token=token)
        rate = config.get("rate_per_minute", DEFAULT_REQUESTS_PER_MINUTE)
        records, query_log, failures = _crawl(source, args, limiter=TokenBucket(rate))

    for failure in failures:
        print(f"parse error: {failure}", file=sys.stderr)

    with AdStore(args.db) as store:
        new_raw = store.insert_raw(records)
        store.log_queries(query_log)
        augmented = 0
        if args.model:
            model = load_model(args.model)
            rules = load_rules(args.rules, args.subrules)
            augmented = store.insert_batch(augment_record(r, model, rules) for r in records)
    print(
        f"ingested {len(records)} records ({new_raw} new, {augmented} newly augmented), "
        f"{len(failures)} errors",
        file=sys.stderr,
    )
    return 0


def _crawl(source, args, limiter):
    if args.page_ids:
        query = AdQuery(page_ids=tuple(_terms(args.page_ids)), page_size=args.page_size)
        requested_at = datetime.now(timezone.utc)
        records, failures, cursor = [], [], None
        while len(records) < args.cap:
            if limiter is not None:
                limiter.acquire()
            page = fetch_page(source, query, cursor)
            records.extend(page.records[: args.cap - len(records)])
            failures.extend(page.failures)
            if page.next_cursor is None:
                break
            cursor = page.next_cursor
        return records, [QueryLogEntry(query.label, requested_at, len(records))], failures
    terms = _terms(args.terms)
    if not terms:
        raise UsageError("--terms must name at least one search term")
    template = AdQuery(search_term=terms[0], page_size=args.page_size)
    return run_keyword_crawl(source, terms, args.cap, template=template, limiter=limiter)


def cmd_train(args):
    labeled = _read_labeled(args.labeled)
    corpus = [(text_to_bow(text), label) for text, label in labeled]
    train_set, test_set = stratified_split(corpus, args.test_fraction, args.seed)
    model = train(train_set, args.alpha)
    save_model(model, args.model)
    if test_set:
        result = metrics([g for _, g in test_set], [predict(model, b)[0] for b, _ in test_set])
        sys.stdout.write(result.to_text())
        if args.out:
            Path(args.out).write_text(result.to_csv(), encoding="utf-8")
    print(f"model written to {args.model} ({len(train_set)} training docs)", file=sys.stderr)
    return 0


def cmd_eval(args):
    labeled = _read_labeled(args.labeled)
    model = load_model(args.model)
    gold = [label for _, label in labeled]
    pred = [predict(model, text_to_bow(text))[0] for text, _ in labeled]
    result = metrics(gold, pred)
    sys.stdout.write(result.to_text())
    if args.out:
        Path(args.out).write_text(result.to_csv(), encoding="utf-8")
    if args.strict:
        rules = load_rules(args.rules, args.subrules)
        strict = [
            strict_filter(p, classify_all(rules, text)) for p, (text, _) in zip(pred, labeled)
        ]
        sys.stdout.write("strict precision (NB and rules)\n")
        for c, value in filtered_precision(gold, strict).items():
            sys.stdout.write(f"{c.value:<12}{value:>11.4f}\n")
    return 0


def cmd_classify(args):
    model = load_model(args.model)
    rules = load_rules(args.rules, args.subrules)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        if args.text is not None:
            label, post = predict(model, text_to_bow(args.text))
            rule_labels = classify_all(rules, args.text)
            doc = {
                "predicted_label": label.value,
                "rule_labels": sorted(c.value for c in rule_labels),
                "strict_label": _value(strict_filter(label, rule_labels)),
                "log_posterior": {c.value: v for c, v in post.items()},
            }
            out.write(json.dumps(doc) + "\n")
        else:
            failures = []
            for record in load_fixture(args.fixture, errors=failures):
                doc = augmented_to_document(augment_record(record, model, rules))
                out.write(json.dumps(doc, ensure_ascii=False) + "\n")
            for failure in failures:
                print(f"parse error: {failure}", file=sys.stderr)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _value(member):
    return None if member is None else member.value


def cmd_augment(args):
    model = load_model(args.model)
    rules = load_rules(args.rules, args.subrules)
    with AdStore(args.db) as store:
        raw = store.raw_records()
        store.insert_batch(augment_record(r, model, rules) for r in raw)
    print(f"augmented {len(raw)} records", file=sys.stderr)
    return 0


def cmd_report(args):
    ad_class = _ad_class(args.ad_class)
    with AdStore(args.db) as store:
        ads = store.query(AdFilter(ad_class=ad_class))
    report = build_report(ads, classes=None if ad_class is None else [ad_class])
    formats = ("json", "csv") if args.format == "both" else (args.format,)
    paths = write_report(report, args.out, formats)
    for path in paths:
        print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_export(args):
    flt = AdFilter(
        ad_class=_ad_class(args.ad_class),
        start_from=args.start_from,
        start_until=args.start_until,
        page_id=args.page_id,
    )
    with AdStore(args.db) as store:
        n = store.export(flt, args.out, args.format)
    print(f"exported {n} ads to {args.out}", file=sys.stderr)
    return 0


# --- parser ------------------------------------------------------------------------------


def _date(value):
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {value!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="audit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    parser.subcommands = sub.choices

    def rules_flags(p):
        p.add_argument("--rules", metavar="PATH", help="class term lists (JSON); bundled default")
        p.add_argument("--subrules", metavar="PATH", help="credit sub-class term lists (JSON)")

    p = sub.add_parser("ingest", help="fetch ads from an endpoint or fixture into a store")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--fixture", metavar="PATH", help="line-delimited JSON ads")
    src.add_argument("--endpoint", metavar="URL", help="Ad Library style endpoint")
    p.add_argument("--config", metavar="PATH", help="JSON config (endpoint_url, access_token)")
    p.add_argument("--terms", action="append", help="comma-separated search terms")
    p.add_argument("--page-ids", action="append", help="comma-separated advertiser page ids")
    p.add_argument("--cap", type=int, default=DEFAULT_PER_TERM_CAP, help="max ads per term")
    p.add_argument("--page-size", type=int, default=DEFAULT_PAGE_SIZE)
    p.add_argument("--db", required=True, metavar="PATH")
    p.add_argument("--model", metavar="PATH", help="also classify and augment with this model")
    rules_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train Naive Bayes and report held-out metrics")
    p.add_argument("--labeled", required=True, metavar="PATH", help="JSON lines {text, label}")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--model", required=True, metavar="PATH", help="where to write the model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--out", metavar="PATH", help="also write metrics CSV here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a model on a labeled corpus")
    p.add_argument("--labeled", required=True, metavar="PATH")
    p.add_argument("--model", required=True, metavar="PATH")
    p.add_argument("--out", metavar="PATH", help="metrics CSV")
    p.add_argument("--strict", action="store_true", help="also report strict-filter precision")
    rules_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("classify", help="label ads or a single text")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--fixture", metavar="PATH")
    what.add_argument("--text")
    p.add_argument("--model", required=True, metavar="PATH")
    rules_flags(p)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("augment", help="(re)augment every raw ad in a store")
    p.add_argument("--db", required=True, metavar="PATH")
    p.add_argument("--model", required=True, metavar="PATH")
    rules_flags(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("report", help="write audit statistics tables")
    p.add_argument("--db", required=True, metavar="PATH")
    p.add_argument("--class", dest="ad_class", help="restrict to one class")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export", help="export stored ads")
    p.add_argument("--db", required=True, metavar="PATH")
    p.add_argument("--class", dest="ad_class")
    p.add_argument("--start-from", type=_date, metavar="YYYY-MM-DD")
    p.add_argument("--start-until", type=_date, metavar="YYYY-MM-DD")
    p.add_argument("--page-id")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(parser.subcommands[args.command].format_usage())
        print(f"audit {args.command}: {exc}", file=sys.stderr)
        return 2
    except (AuditError, OSError, ValueError) as exc:
        print(f"audit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
