"""Corpus-level auditing: streaming ingestion and mergeable statistics.

Reports stream through one at a time (bounded memory); per-record findings
from the detectors are folded into a `CorpusStats`, and independent stats
objects merge associatively so corpora can be processed in parallel slices.
"""

from __future__ import annotations

import bisect
import csv
import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .detect import MalformedIpError, classify_ip_field
from .model import (
    CrashReport,
    FieldState,
    Finding,
    FindingCategory,
    RiskSeverity,
    SourceField,
    classify_severity,
)

SCHEMA_VERSION = "1"

_SCHEME_RE = re.compile(r"^([A-Za-z][A-Za-z0-9+.\-]*)://")


class CorpusFormatError(ValueError):
    """More than half of a corpus failed to parse, or the format is unusable."""


class DistinctEmails:
    """Distinct-value counter: an exact set up to a cutoff, then a KMV sketch.

    The sketch keeps the `SKETCH_K` smallest 64-bit hashes seen; its union is
    order-independent, so merging stays associative and commutative even when
    one side has already been converted.
    """

    EXACT_LIMIT = 1_000_000
    SKETCH_K = 2048
    _HASH_SPACE = 2**64

    __slots__ = ("_exact", "_sketch")

    def __init__(self):
        self._exact: set[str] | None = set()
        self._sketch: list[int] | None = None

    @staticmethod
    def _hash(value: str) -> int:
        digest = hashlib.blake2b(value.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big")

    def add(self, value: str) -> None:
        if self._exact is not None:
            self._exact.add(value)
            if len(self._exact) > self.EXACT_LIMIT:
                self._convert()
        else:
            self._insert(self._hash(value))

    def _convert(self) -> None:
        hashes = sorted({self._hash(v) for v in self._exact})
        self._sketch = hashes[: self.SKETCH_K]
        self._exact = None

    def _insert(self, h: int) -> None:
        sketch = self._sketch
        i = bisect.bisect_left(sketch, h)
        if i < len(sketch) and sketch[i] == h:
            return
        if len(sketch) < self.SKETCH_K:
            sketch.insert(i, h)
        elif h < sketch[-1]:
            sketch.insert(i, h)
            sketch.pop()

    @property
    def is_exact(self) -> bool:
        return self._exact is not None

    def count(self) -> int:
        if self._exact is not None:
            return len(self._exact)
        sketch = self._sketch
        if len(sketch) < self.SKETCH_K:
            return len(sketch)
        return int(round((self.SKETCH_K - 1) * self._HASH_SPACE / sketch[-1]))

    def merge(self, other: "DistinctEmails") -> "DistinctEmails":
        result = DistinctEmails()
        if self.is_exact and other.is_exact:
            result._exact = self._exact | other._exact
            if len(result._exact) > self.EXACT_LIMIT:
                result._convert()
            return result
        left = self._sketch if self._sketch is not None else sorted(self._hash(v) for v in self._exact)
        right = other._sketch if other._sketch is not None else sorted(other._hash(v) for v in other._exact)
        result._exact = None
        result._sketch = sorted(set(left) | set(right))[: self.SKETCH_K]
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, DistinctEmails):
            return NotImplemented
        return self._exact == other._exact and self._sketch == other._sketch

    def __repr__(self) -> str:
        kind = "exact" if self.is_exact else "sketch"
        return f"DistinctEmails({kind}, count={self.count()})"


@dataclass
class CorpusStats:
    """Mergeable aggregate of findings and population statistics."""

    records_seen: int = 0
    skipped: int = 0
    findings_by_category: Counter = field(default_factory=Counter)
    findings_by_category_and_field: Counter = field(default_factory=Counter)
    severity_totals: Counter = field(default_factory=Counter)
    distinct_emails: DistinctEmails = field(default_factory=DistinctEmails)
    platform_histogram: Counter = field(default_factory=Counter)
    scheme_histogram: Counter = field(default_factory=Counter)
    ip_state_histogram: Counter = field(default_factory=Counter)
    ip_malformed: int = 0


def report_from_dict(obj: object) -> CrashReport:
    """Build a CrashReport from a decoded JSONL object; raises ValueError if malformed.

    Missing keys default to empty/zero; unknown keys are ignored; keys that
    are present must carry the right type.
    """
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    rid = obj.get("id")
    if not isinstance(rid, str) or rid == "":
        raise ValueError("record id must be a non-empty string")
    texts = {}
    for key in ("url", "description", "platform", "ip"):
        value = obj.get(key, "")
        if not isinstance(value, str):
            raise ValueError(f"field {key} must be a string")
        texts[key] = value
    ts = obj.get("timestamp", 0)
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise ValueError("timestamp must be an integer")
    return CrashReport(id=rid, timestamp=ts, **texts)


def _report_from_csv_row(row: dict) -> CrashReport:
    rid = (row.get("id") or "").strip()
    if rid == "":
        raise ValueError("record id must be non-empty")
    ts_text = (row.get("timestamp") or "").strip()
    if ts_text == "":
        ts = 0
    else:
        try:
            ts = int(ts_text)
        except ValueError:
            raise ValueError("timestamp must be an integer") from None
    return CrashReport(
        id=rid,
        url=row.get("url") or "",
        description=row.get("description") or "",
        platform=row.get("platform") or "",
        ip=row.get("ip") or "",
        timestamp=ts,
    )


class CorpusReader:
    """Streams crash reports from a JSONL or CSV text stream.

    Malformed records are skipped and counted; if more than half of the
    records were malformed, iteration ends with a CorpusFormatError.
    """

    def __init__(self, stream: IO[str], fmt: str = "jsonl"):
        if fmt not in ("jsonl", "csv"):
            raise ValueError(f"unknown corpus format: {fmt!r}")
        self.stream = stream
        self.fmt = fmt
        self.valid = 0
        self.skipped = 0

    def __iter__(self) -> Iterator[CrashReport]:
        if self.fmt == "jsonl":
            for line in self.stream:
                if not line.strip():
                    continue
                try:
                    report = report_from_dict(json.loads(line))
                except ValueError:
                    self.skipped += 1
                    continue
                self.valid += 1
                yield report
        else:
            reader = csv.DictReader(self.stream)
            for row in reader:
                try:
                    report = _report_from_csv_row(row)
                except ValueError:
                    self.skipped += 1
                    continue
                self.valid += 1
                yield report
        if self.skipped > self.valid:
            raise CorpusFormatError(
                f"{self.skipped} of {self.skipped + self.valid} records malformed"
            )


def ingest(stream: IO[str], fmt: str = "jsonl") -> CorpusReader:
    """Open a streaming reader over a corpus; see CorpusReader."""
    return CorpusReader(stream, fmt)


def aggregate(stats: CorpusStats, report: CrashReport, findings: Iterable[Finding]) -> CorpusStats:
    """Fold one record and its findings into `stats`. Mutates and returns `stats`."""
    stats.records_seen += 1
    for finding in findings:
        stats.findings_by_category[finding.category] += 1
        stats.findings_by_category_and_field[(finding.category, finding.field)] += 1
        stats.severity_totals[finding.severity] += 1
        if finding.category is FindingCategory.EMAIL_ADDRESS:
            stats.distinct_emails.add(finding.excerpt.lower())
    if report.platform:
        stats.platform_histogram[report.platform] += 1
    m = _SCHEME_RE.match(report.url)
    if m:
        stats.scheme_histogram[m.group(1).lower()] += 1
    try:
        state = classify_ip_field(report.ip)
    except MalformedIpError:
        stats.ip_malformed += 1
    else:
        stats.ip_state_histogram[state] += 1
    return stats


def merge(a: CorpusStats, b: CorpusStats) -> CorpusStats:
    """Component-wise sum of two stats objects; associative, commutative, with
    the empty stats as identity. Returns a new object."""
    return CorpusStats(
        records_seen=a.records_seen + b.records_seen,
        skipped=a.skipped + b.skipped,
        findings_by_category=a.findings_by_category + b.findings_by_category,
        findings_by_category_and_field=(
            a.findings_by_category_and_field + b.findings_by_category_and_field
        ),
        severity_totals=a.severity_totals + b.severity_totals,
        distinct_emails=a.distinct_emails.merge(b.distinct_emails),
        platform_histogram=a.platform_histogram + b.platform_histogram,
        scheme_histogram=a.scheme_histogram + b.scheme_histogram,
        ip_state_histogram=a.ip_state_histogram + b.ip_state_histogram,
        ip_malformed=a.ip_malformed + b.ip_malformed,
    )


def _report_payload(stats: CorpusStats) -> dict:
    severity = {
        sev.label: int(stats.severity_totals.get(sev, 0)) for sev in RiskSeverity
    }
    categories = {}
    for category in FindingCategory:
        by_field = {}
        for fld in SourceField:
            n = stats.findings_by_category_and_field.get((category, fld), 0)
            if n:
                by_field[fld.value] = int(n)
        entry: dict = {"total": int(stats.findings_by_category.get(category, 0))}
        if category is FindingCategory.EMAIL_ADDRESS:
            entry["distinct"] = stats.distinct_emails.count()
        entry["by_field"] = by_field
        categories[category.value] = entry
    ip_states = {state.value: int(stats.ip_state_histogram.get(state, 0)) for state in FieldState}
    ip_states["malformed"] = stats.ip_malformed
    return {
        "schema_version": SCHEMA_VERSION,
        "records_seen": stats.records_seen,
        "skipped": stats.skipped,
        "severity_totals": severity,
        "categories": categories,
        "platform_histogram": {k: int(v) for k, v in sorted(stats.platform_histogram.items())},
        "scheme_histogram": {k: int(v) for k, v in sorted(stats.scheme_histogram.items())},
        "ip_states": ip_states,
    }


def _text_report(stats: CorpusStats) -> str:
    lines = []
    lines.append("crash-report audit")
    lines.append(f"records seen    {stats.records_seen}")
    lines.append(f"records skipped {stats.skipped}")
    lines.append("")
    lines.append(f"{'severity':<8}  {'category':<22}  {'total':>7}  by field")
    for severity in (RiskSeverity.HIGH, RiskSeverity.MEDIUM, RiskSeverity.LOW):
        for category in FindingCategory:
            if classify_severity(category) is not severity:
                continue
            total = stats.findings_by_category.get(category, 0)
            parts = []
            for fld in SourceField:
                n = stats.findings_by_category_and_field.get((category, fld), 0)
                if n:
                    parts.append(f"{fld.value}={n}")
            extra = ""
            if category is FindingCategory.EMAIL_ADDRESS and total:
                extra = f" distinct={stats.distinct_emails.count()}"
            lines.append(
                f"{severity.label:<8}  {category.value:<22}  {total:>7}  {' '.join(parts)}{extra}".rstrip()
            )
    lines.append("")
    lines.append("platform histogram")
    for name, n in sorted(stats.platform_histogram.items()):
        lines.append(f"  {name}: {n}")
    lines.append("scheme histogram")
    for name, n in sorted(stats.scheme_histogram.items()):
        lines.append(f"  {name}: {n}")
    lines.append("ip states")
    for state in FieldState:
        lines.append(f"  {state.value}: {stats.ip_state_histogram.get(state, 0)}")
    lines.append(f"  malformed: {stats.ip_malformed}")
    lines.append("")
    return "\n".join(lines)


def emit_report(stats: CorpusStats, fmt: str = "json") -> bytes:
    """Serialize stats deterministically: identical stats give identical bytes."""
    if fmt == "json":
        return (json.dumps(_report_payload(stats), indent=2) + "\n").encode("utf-8")
    if fmt == "text":
        return _text_report(stats).encode("utf-8")
    raise ValueError(f"unknown report format: {fmt!r}")
