"""Command-line interface: scrub, audit, gen, stats, check.

Exit codes are a stable contract:
  0 success, 1 I/O failure, 2 unparseable input, 3 severity gate tripped,
  4 corpus mismatch (check).

Subcommands read/write '-' for standard streams, so pipelines like
`crashscrub gen ... | crashscrub scrub | crashscrub audit` work without
temporary files.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from itertools import islice

from .audit import (
    CorpusFormatError,
    CorpusReader,
    CorpusStats,
    aggregate,
    emit_report,
    ingest,
    merge,
    report_from_dict,
)
from .detect import DEFAULT_DETECTORS, DetectorSet, load_watchlist, run_all
from .gencorpus import (
    CorpusSpec,
    GenerationConfigError,
    iter_generate,
    label_to_json_line,
    read_truth_jsonl,
    report_to_json_line,
)
from .model import CrashReport, RiskSeverity, classify_severity
from .sanitize import SanitizerConfig, load_keywords, readability_check, sanitize_report, sanitize_url

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARSE = 2
EXIT_GATE = 3
EXIT_MISMATCH = 4

_CHUNK_LINES = 2000

_CSV_COLUMNS = ("id", "url", "description", "platform", "ip", "timestamp")


@contextlib.contextmanager
def _open_input(path: str):
    if path == "-":
        yield sys.stdin
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            yield fh


@contextlib.contextmanager
def _open_output(path: str, binary: bool = False):
    if path == "-":
        yield sys.stdout.buffer if binary else sys.stdout
    else:
        mode = "wb" if binary else "w"
        kwargs = {} if binary else {"encoding": "utf-8", "newline": ""}
        with open(path, mode, **kwargs) as fh:
            yield fh


def _sanitizer_config(args) -> SanitizerConfig:
    kwargs = {}
    if getattr(args, "keywords", None):
        kwargs["url_keywords"] = tuple(load_keywords(args.keywords))
    if getattr(args, "desc_keywords", None):
        kwargs["description_keywords"] = tuple(load_keywords(args.desc_keywords))
    return SanitizerConfig(**kwargs)


def _detector_set(args) -> DetectorSet:
    if getattr(args, "watchlist", None):
        return DetectorSet(phishing_watchlist=load_watchlist(args.watchlist))
    return DEFAULT_DETECTORS


def _line_chunks(stream, size: int = _CHUNK_LINES):
    while True:
        chunk = list(islice(stream, size))
        if not chunk:
            return
        yield chunk


def _report_to_csv_row(report: CrashReport) -> list:
    return [report.id, report.url, report.description, report.platform, report.ip, report.timestamp]


# ---------------------------------------------------------------------------
# scrub

def _scrub_line(line: str, config: SanitizerConfig) -> tuple[str | None, list]:
    """Sanitize one JSONL record line; returns (output line or None, event rows)."""
    if not line.strip():
        return None, []
    try:
        report = report_from_dict(json.loads(line))
    except ValueError:
        return None, []
    result = sanitize_report(report, config)
    rows = [
        {
            "record_id": report.id,
            "field": ev.field.value,
            "keyword": ev.keyword,
            "start": ev.span_masked[0],
            "end": ev.span_masked[1],
            "original_length": ev.original_length,
        }
        for ev in result.events
    ]
    return report_to_json_line(result.report), rows


def _scrub_chunk(lines: list[str], config: SanitizerConfig) -> list[tuple[str | None, list]]:
    return [_scrub_line(line, config) for line in lines]


def cmd_scrub(args) -> int:
    config = _sanitizer_config(args)
    if args.url is not None:
        masked, _ = sanitize_url(args.url, config)
        print(masked)
        return EXIT_OK

    events_sink = None
    events_path = None
    if args.verbose:
        events_path = args.events or (args.output + ".events" if args.output != "-" else None)

    def write_events(sink, rows):
        for row in rows:
            sink.write(json.dumps(row, separators=(",", ":")) + "\n")

    with contextlib.ExitStack() as stack:
        in_fh = stack.enter_context(_open_input(args.input))
        out_fh = stack.enter_context(_open_output(args.output))
        if args.verbose:
            if events_path:
                events_sink = stack.enter_context(open(events_path, "w", encoding="utf-8"))
            else:
                events_sink = sys.stderr

        if args.format == "csv":
            import csv as _csv

            reader = ingest(in_fh, "csv")
            writer = _csv.writer(out_fh)
            writer.writerow(_CSV_COLUMNS)
            for report in reader:
                result = sanitize_report(report, config)
                writer.writerow(_report_to_csv_row(result.report))
                if events_sink is not None:
                    rows = _scrub_line(report_to_json_line(report), config)[1]
                    write_events(events_sink, rows)
            return EXIT_OK

        skipped = 0
        valid = 0
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                pending = deque()
                for chunk in _line_chunks(in_fh):
                    pending.append(pool.submit(_scrub_chunk, chunk, config))
                    while len(pending) > args.jobs * 2:
                        for out_line, rows in pending.popleft().result():
                            if out_line is None:
                                skipped += 1
                                continue
                            valid += 1
                            out_fh.write(out_line + "\n")
                            if events_sink is not None:
                                write_events(events_sink, rows)
                while pending:
                    for out_line, rows in pending.popleft().result():
                        if out_line is None:
                            skipped += 1
                            continue
                        valid += 1
                        out_fh.write(out_line + "\n")
                        if events_sink is not None:
                            write_events(events_sink, rows)
        else:
            for line in in_fh:
                if not line.strip():
                    continue
                out_line, rows = _scrub_line(line, config)
                if out_line is None:
                    skipped += 1
                    continue
                valid += 1
                out_fh.write(out_line + "\n")
                if events_sink is not None:
                    write_events(events_sink, rows)
        if skipped > valid:
            raise CorpusFormatError(f"{skipped} of {skipped + valid} records malformed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit

def _audit_chunk(lines: list[str], det: DetectorSet) -> CorpusStats:
    """Parse and aggregate one chunk of JSONL lines into a fresh stats object."""
    stats = CorpusStats()
    for line in lines:
        if not line.strip():
            continue
        try:
            report = report_from_dict(json.loads(line))
        except ValueError:
            stats.skipped += 1
            continue
        aggregate(stats, report, run_all(report, det))
    return stats


def _run_audit(args, det: DetectorSet) -> CorpusStats:
    stats = CorpusStats()
    with _open_input(args.input) as in_fh:
        if args.format == "jsonl" and args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                pending = deque()
                for chunk in _line_chunks(in_fh):
                    pending.append(pool.submit(_audit_chunk, chunk, det))
                    while len(pending) > args.jobs * 2:
                        stats = merge(stats, pending.popleft().result())
                while pending:
                    stats = merge(stats, pending.popleft().result())
            if stats.skipped > stats.records_seen:
                raise CorpusFormatError(
                    f"{stats.skipped} of {stats.skipped + stats.records_seen} records malformed"
                )
        else:
            reader = ingest(in_fh, args.format)
            for report in reader:
                aggregate(stats, report, run_all(report, det))
            stats.skipped = reader.skipped
    return stats


def cmd_audit(args) -> int:
    det = _detector_set(args)
    stats = _run_audit(args, det)
    payload = emit_report(stats, args.report)
    with _open_output(args.output, binary=True) as out_fh:
        out_fh.write(payload)
    if args.fail_on is not None:
        threshold = RiskSeverity.from_label(args.fail_on)
        gated = sum(
            count for sev, count in stats.severity_totals.items() if sev >= threshold
        )
        if gated > 0:
            return EXIT_GATE
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen

def _spec_from_args(args) -> CorpusSpec:
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            obj = json.load(fh)
        return CorpusSpec(
            seed=int(obj.get("seed", args.seed)),
            benign_count=int(obj.get("benign_count", 0)),
            planted={k: int(v) for k, v in obj.get("planted", {}).items()},
            path_embedded_fraction=float(obj.get("path_embedded_fraction", 0.08)),
            locale_pool=tuple(obj["locale_pool"]) if "locale_pool" in obj else CorpusSpec().locale_pool,
        )
    planted = {}
    for item in args.plant or []:
        name, _, count = item.partition("=")
        if not count:
            raise ValueError(f"--plant expects CATEGORY=COUNT, got {item!r}")
        planted[name] = int(count)
    return CorpusSpec(
        seed=args.seed,
        benign_count=args.benign,
        planted=planted,
        path_embedded_fraction=args.path_embedded,
    )


def cmd_gen(args) -> int:
    spec = _spec_from_args(args)
    with contextlib.ExitStack() as stack:
        out_fh = stack.enter_context(_open_output(args.output))
        truth_fh = stack.enter_context(open(args.truth, "w", encoding="utf-8")) if args.truth else None
        for report, labels in iter_generate(spec):
            out_fh.write(report_to_json_line(report) + "\n")
            if truth_fh is not None:
                for label in labels:
                    truth_fh.write(label_to_json_line(label) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# stats

def cmd_stats(args) -> int:
    stats = CorpusStats()
    with _open_input(args.input) as in_fh:
        reader = ingest(in_fh, args.format)
        for report in reader:
            aggregate(stats, report, [])
        stats.skipped = reader.skipped
    if args.report == "json":
        payload = (
            json.dumps(
                {
                    "schema_version": "1",
                    "records_seen": stats.records_seen,
                    "skipped": stats.skipped,
                    "platform_histogram": dict(sorted(stats.platform_histogram.items())),
                    "scheme_histogram": dict(sorted(stats.scheme_histogram.items())),
                },
                indent=2,
            )
            + "\n"
        ).encode("utf-8")
    else:
        lines = [f"records seen    {stats.records_seen}", f"records skipped {stats.skipped}"]
        lines.append("platform histogram")
        lines.extend(f"  {k}: {v}" for k, v in sorted(stats.platform_histogram.items()))
        lines.append("scheme histogram")
        lines.extend(f"  {k}: {v}" for k, v in sorted(stats.scheme_histogram.items()))
        payload = ("\n".join(lines) + "\n").encode("utf-8")
    with _open_output(args.output, binary=True) as out_fh:
        out_fh.write(payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# check

def cmd_check(args) -> int:
    with _open_input(args.input) as fh:
        originals = list(ingest(fh, args.format))
    with _open_input(args.scrubbed) as fh:
        scrubbed = list(ingest(fh, args.format))
    if len(originals) != len(scrubbed):
        print(
            f"corpus length mismatch: {len(originals)} original vs {len(scrubbed)} scrubbed",
            file=sys.stderr,
        )
        return EXIT_MISMATCH
    scrubbed_by_id = {r.id: r for r in scrubbed}
    if set(scrubbed_by_id) != {r.id for r in originals}:
        print("corpus id mismatch", file=sys.stderr)
        return EXIT_MISMATCH

    with open(args.truth, encoding="utf-8") as fh:
        truth = read_truth_jsonl(fh)

    high_labels = [
        lab for lab in truth.labels if classify_severity(lab.category) is RiskSeverity.HIGH
    ]
    masked_ok = 0
    for lab in high_labels:
        record = scrubbed_by_id.get(lab.record_id)
        if record is None:
            continue
        text = getattr(record, lab.field.value, "")
        width = min(4, lab.end - lab.start)
        window = text[lab.start : lab.start + width]
        if len(window) == width and set(window) == {"*"}:
            masked_ok += 1
    masking_rate = masked_ok / len(high_labels) if high_labels else 1.0

    url_total = 0
    url_readable = 0
    for original in originals:
        if not original.url:
            continue
        url_total += 1
        if readability_check(original.url, scrubbed_by_id[original.id].url):
            url_readable += 1
    readability_rate = url_readable / url_total if url_total else 1.0

    with _open_output(args.output) as out_fh:
        out_fh.write(f"masking_rate {masking_rate:.4f}\n")
        out_fh.write(f"readability_rate {readability_rate:.4f}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crashscrub",
        description="Sanitize crash-report corpora and audit them for leaked sensitive data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, output_default="-"):
        p.add_argument("-i", "--input", default="-", help="input path or '-' for stdin")
        p.add_argument("-o", "--output", default=output_default, help="output path or '-' for stdout")
        p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl", help="corpus format")

    p = sub.add_parser("scrub", help="mask sensitive values in a corpus (or one --url)")
    add_io(p)
    p.add_argument("--keywords", help="URL keyword list file")
    p.add_argument("--desc-keywords", dest="desc_keywords", help="description keyword list file")
    p.add_argument("--url", help="sanitize a single raw URL and print it")
    p.add_argument("--verbose", action="store_true", help="write a mask-event log")
    p.add_argument("--events", help="mask-event sidecar path (default: OUTPUT.events)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (jsonl only)")
    p.set_defaults(func=cmd_scrub)

    p = sub.add_parser("audit", help="scan a corpus and emit a findings report")
    add_io(p)
    p.add_argument("--report", choices=("json", "text"), default="json", help="report format")
    p.add_argument("--watchlist", help="phishing watchlist file")
    p.add_argument("--fail-on", dest="fail_on", choices=("low", "medium", "high"),
                   help="exit 3 if any finding at or above this severity exists")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (jsonl only)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("gen", help="generate a labeled synthetic corpus")
    p.add_argument("-o", "--output", default="-", help="corpus output path or '-'")
    p.add_argument("--truth", help="ground-truth labels output path")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--benign", type=int, default=0, help="benign record count")
    p.add_argument("--plant", action="append", metavar="CATEGORY=COUNT",
                   help="plant COUNT items of CATEGORY (repeatable)")
    p.add_argument("--path-embedded", dest="path_embedded", type=float, default=0.08,
                   help="fraction of session/token URLs planted in the path")
    p.add_argument("--spec", help="JSON spec file (overrides the flags above)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", help="platform/scheme histograms only")
    add_io(p)
    p.add_argument("--report", choices=("json", "text"), default="json", help="report format")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("check", help="masking and readability rates against ground truth")
    add_io(p)
    p.add_argument("--scrubbed", required=True, help="scrubbed corpus path")
    p.add_argument("--truth", required=True, help="ground-truth labels path")
    p.set_defaults(func=cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusFormatError, GenerationConfigError, json.JSONDecodeError) as exc:
        print(f"crashscrub: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"crashscrub: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BrokenPipeError:
        return EXIT_IO
    except OSError as exc:
        print(f"crashscrub: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
