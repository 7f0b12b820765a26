"""Deterministic detectors for sensitive data and URL-borne attacks.

Each detector scans one crash report field and emits severity-classified
findings with spans into the raw text:

- SQL injection: co-occurrence of SQL keywords in the decoded path+query
- directory traversal: "../" runs, including percent-encoded forms
- local file inclusion and XSS: fixed needle substrings
- phishing: brand watchlist domains riding inside a foreign URL
- credentials / session IDs / token IDs: query and matrix parameters
  keyed by well-known names, plus "keyword: value" shapes in descriptions
- email addresses, embedded IPv4 addresses, phone numbers, and
  contact-request phrases

Matching happens on percent-decoded text (bounded rounds) and spans are
mapped back to raw offsets, so encoded payloads cannot hide from the scan
while excerpts stay byte-faithful to the stored field.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import CrashReport, FieldState, Finding, FindingCategory, SourceField
from .urltools import ParsedUrl, Span, parse_url, percent_decode, percent_decode_map


class MalformedIpError(ValueError):
    """The ip field holds something that is not empty and not a dotted quad."""


@dataclass(frozen=True)
class DetectorSet:
    """Needles, keyword sets, and knobs for all detectors."""

    sql_keywords: frozenset[str] = frozenset({"select", "from", "where", "union"})
    traversal_needle: str = "../"
    lfi_needle: str = "/etc/passwd"
    xss_needles: frozenset[str] = frozenset({"document.cookie", "<script"})
    phishing_watchlist: frozenset[str] = frozenset({"wellsfargo.com", "paypal.com"})
    credential_keys: frozenset[str] = frozenset(
        {"username", "user", "login", "password", "pass", "passwd", "pwd"}
    )
    session_keys: frozenset[str] = frozenset(
        {"sessionid", "session", "sid", "jsessionid", "phpsessid"}
    )
    token_keys: frozenset[str] = frozenset({"tokenid", "token", "auth", "access_token"})
    location_keys: frozenset[str] = frozenset({"address"})
    contact_phrases: frozenset[str] = frozenset(
        {"call me at", "my phone number", "please contact me", "phone number is"}
    )
    decode_rounds: int = 2
    # phone heuristics; tuning knobs, not part of the detection contract
    contact_window: int = 40
    phone_min_digits: int = 7
    phone_max_digits: int = 15
    standalone_min_digits: int = 10

    def __post_init__(self):
        for name in ("sql_keywords", "xss_needles", "phishing_watchlist", "credential_keys",
                     "session_keys", "token_keys", "location_keys", "contact_phrases"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if any(d != d.lower() for d in self.phishing_watchlist):
            raise ValueError("phishing_watchlist entries must be lowercase")
        if self.decode_rounds < 1:
            raise ValueError("decode_rounds must be >= 1")


DEFAULT_DETECTORS = DetectorSet()

_TOKEN_RE = re.compile(r"\w+")
_TRAVERSAL_RUN_RE = re.compile(r"(?:\.\./)+")
_EMAIL_RE = re.compile(r"[A-Za-z0-9._%+\-]+@(?:[A-Za-z0-9\-]+\.)+[A-Za-z]{2,}")
_IPV4_RE = re.compile(
    r"(?<![\d.])(?:(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)\.){3}"
    r"(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)(?!\.?\d)"
)
_PHONE_RUN_RE = re.compile(r"\d[\d\s().\-]*\d|\d")
_IP_FIELD_RE = re.compile(r"^(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})$")


class _DecodedView:
    """Decoded text plus a mapper from decoded offsets back to raw spans.

    `spans` is None when decoding was the identity (no escapes), which is the
    common case; the mapper then just shifts by the base offset.
    """

    __slots__ = ("text", "spans", "base")

    def __init__(self, text: str, spans: list[Span] | None, base: int = 0):
        self.text = text
        self.spans = spans
        self.base = base

    def raw_span(self, start: int, end: int) -> Span:
        if self.spans is None:
            return (self.base + start, self.base + end)
        return (self.spans[start][0], self.spans[end - 1][1])


def _decode_view(text: str, rounds: int, plus_as_space: bool, base: int = 0) -> _DecodedView:
    if "%" not in text and not (plus_as_space and "+" in text):
        return _DecodedView(text, None, base)
    decoded, spans = percent_decode_map(text, rounds, plus_as_space)
    return _DecodedView(decoded, [(a + base, b + base) for a, b in spans])


def _decoded_suffix(url: ParsedUrl, rounds: int, plus_in_query: bool) -> _DecodedView:
    """Decode path+query after the authority; offsets map into url.raw."""
    raw = url.raw
    frag = raw.find("#")
    end = frag if frag >= 0 else len(raw)
    body = raw[url.prefix_end : end]
    base = url.prefix_end
    q = body.find("?")
    if q < 0:
        return _decode_view(body, rounds, False, base)
    path_view = _decode_view(body[:q], rounds, False, base)
    query_view = _decode_view(body[q + 1 :], rounds, plus_in_query, base + q + 1)
    if path_view.spans is None and query_view.spans is None:
        return _DecodedView(body, None, base)
    path_spans = path_view.spans
    if path_spans is None:
        path_spans = [(base + k, base + k + 1) for k in range(q)]
    query_spans = query_view.spans
    if query_spans is None:
        qbase = base + q + 1
        query_spans = [(qbase + k, qbase + k + 1) for k in range(len(query_view.text))]
    spans = path_spans + [(base + q, base + q + 1)] + query_spans
    return _DecodedView(path_view.text + "?" + query_view.text, spans)


class _UrlViews:
    """Per-URL cache of decoded views so run_all decodes each region once."""

    __slots__ = ("url", "rounds", "_suffix", "_full")

    def __init__(self, url: ParsedUrl, rounds: int):
        self.url = url
        self.rounds = rounds
        self._suffix: _DecodedView | None = None
        self._full: _DecodedView | None = None

    @property
    def suffix(self) -> _DecodedView:
        if self._suffix is None:
            self._suffix = _decoded_suffix(self.url, self.rounds, plus_in_query=True)
        return self._suffix

    @property
    def full(self) -> _DecodedView:
        if self._full is None:
            self._full = _decode_view(self.url.raw, self.rounds, False)
        return self._full


def _suffix_view(url: ParsedUrl, det: DetectorSet, views: "_UrlViews | None") -> _DecodedView:
    if views is not None:
        return views.suffix
    return _decoded_suffix(url, det.decode_rounds, plus_in_query=True)


_NEEDLE_CACHE: dict[str, re.Pattern] = {}


def _needle_pattern(needle: str) -> re.Pattern:
    pattern = _NEEDLE_CACHE.get(needle)
    if pattern is None:
        pattern = _NEEDLE_CACHE[needle] = re.compile(re.escape(needle), re.IGNORECASE)
    return pattern


def _needle_findings(
    needle: str,
    category: FindingCategory,
    view: _DecodedView,
    raw: str,
    field: SourceField,
    report_id: str,
) -> list[Finding]:
    findings = []
    for m in _needle_pattern(needle).finditer(view.text):
        start, end = view.raw_span(m.start(), m.end())
        findings.append(Finding.at(report_id, category, field, raw, start, end))
    return findings


def detect_sql_injection(
    url: ParsedUrl, det: DetectorSet, report_id: str = "", views: "_UrlViews | None" = None
) -> list[Finding]:
    """One finding when >=2 distinct SQL keywords co-occur, one being union/select."""
    view = _suffix_view(url, det, views)
    hits = [
        (m.group().lower(), m.start(), m.end())
        for m in _TOKEN_RE.finditer(view.text)
        if m.group().lower() in det.sql_keywords
    ]
    distinct = {word for word, _, _ in hits}
    if len(distinct) < 2 or not ({"union", "select"} & distinct):
        return []
    first = min(start for _, start, _ in hits)
    last = max(end for _, _, end in hits)
    start, end = view.raw_span(first, last)
    return [
        Finding.at(report_id, FindingCategory.SQL_INJECTION, SourceField.URL, url.raw, start, end)
    ]


def detect_directory_traversal(
    url: ParsedUrl, det: DetectorSet, report_id: str = "", views: "_UrlViews | None" = None
) -> list[Finding]:
    """One finding per maximal run of consecutive "../" in the decoded path+query."""
    view = _suffix_view(url, det, views)
    findings = []
    for m in _TRAVERSAL_RUN_RE.finditer(view.text):
        start, end = view.raw_span(m.start(), m.end())
        findings.append(
            Finding.at(
                report_id, FindingCategory.DIRECTORY_TRAVERSAL, SourceField.URL,
                url.raw, start, end,
            )
        )
    return findings


def detect_lfi(
    url: ParsedUrl, det: DetectorSet, report_id: str = "", views: "_UrlViews | None" = None
) -> list[Finding]:
    view = _suffix_view(url, det, views)
    return _needle_findings(
        det.lfi_needle, FindingCategory.LOCAL_FILE_INCLUSION,
        view, url.raw, SourceField.URL, report_id,
    )


def detect_xss(
    url: ParsedUrl, det: DetectorSet, report_id: str = "", views: "_UrlViews | None" = None
) -> list[Finding]:
    view = _suffix_view(url, det, views)
    findings = []
    for needle in sorted(det.xss_needles):
        findings.extend(
            _needle_findings(
                needle, FindingCategory.CROSS_SITE_SCRIPTING,
                view, url.raw, SourceField.URL, report_id,
            )
        )
    return findings


def detect_phishing(url: ParsedUrl, det: DetectorSet, report_id: str = "") -> list[Finding]:
    """Watchlist brand inside a path segment or host whose registered domain differs."""
    if not url.host:
        return []
    host_span_len = url.host_span[1] - url.host_span[0]
    for entry in sorted(det.phishing_watchlist):
        if url.host == entry or url.host.endswith("." + entry):
            continue  # self-reference is not phishing
        if host_span_len == len(url.host):
            idx = ("." + url.host + ".").find("." + entry + ".")
            if idx >= 0:
                start = url.host_span[0] + idx
                return [
                    Finding.at(
                        report_id, FindingCategory.PHISHING, SourceField.URL,
                        url.raw, start, start + len(entry),
                    )
                ]
        for segment, (seg_start, _) in zip(url.path_segments, url.path_segment_spans):
            view = _decode_view(segment, det.decode_rounds, False, seg_start)
            m = _needle_pattern(entry).search(view.text)
            if m:
                start, end = view.raw_span(m.start(), m.end())
                return [
                    Finding.at(
                        report_id, FindingCategory.PHISHING, SourceField.URL,
                        url.raw, start, end,
                    )
                ]
    return []


def detect_emails(
    text: str,
    field: SourceField,
    det: DetectorSet = DEFAULT_DETECTORS,
    report_id: str = "",
    view: _DecodedView | None = None,
) -> list[Finding]:
    """One finding per mailbox-pattern match over the percent-decoded text."""
    if view is None:
        view = _decode_view(text, det.decode_rounds, False)
    findings = []
    for m in _EMAIL_RE.finditer(view.text):
        start, end = view.raw_span(m.start(), m.end())
        findings.append(
            Finding.at(report_id, FindingCategory.EMAIL_ADDRESS, field, text, start, end)
        )
    return findings


def _pair_key_findings(
    url: ParsedUrl,
    keys: frozenset[str],
    category: FindingCategory,
    det: DetectorSet,
    report_id: str,
) -> list[Finding]:
    findings = []
    for pair in url.query_pairs:
        if not pair.value:
            continue
        key = pair.key if "%" not in pair.key else percent_decode(pair.key, det.decode_rounds)
        if key.lower() in keys:
            findings.append(
                Finding.at(
                    report_id, category, SourceField.URL,
                    url.raw, pair.value_span[0], pair.value_span[1],
                )
            )
    return findings


_DESC_VALUE_CACHE: dict[frozenset[str], re.Pattern] = {}


def _desc_value_pattern(keys: frozenset[str]) -> re.Pattern:
    pattern = _DESC_VALUE_CACHE.get(keys)
    if pattern is None:
        ordered = sorted(keys, key=len, reverse=True)
        pattern = re.compile(
            r"(?<!\w)(?:" + "|".join(re.escape(k) for k in ordered) + r")\W+(\w+)",
            re.IGNORECASE,
        )
        _DESC_VALUE_CACHE[keys] = pattern
    return pattern


def detect_credentials(
    report: CrashReport, det: DetectorSet, parsed_url: ParsedUrl | None = None
) -> list[Finding]:
    """Credential values from URL parameters and "keyword: value" description shapes."""
    findings: list[Finding] = []
    if report.url:
        url = parsed_url if parsed_url is not None else parse_url(report.url)
        findings.extend(
            _pair_key_findings(url, det.credential_keys, FindingCategory.CREDENTIAL, det, report.id)
        )
    if report.description:
        for m in _desc_value_pattern(det.credential_keys).finditer(report.description):
            findings.append(
                Finding.at(
                    report.id, FindingCategory.CREDENTIAL, SourceField.DESCRIPTION,
                    report.description, m.start(1), m.end(1),
                )
            )
    return findings


def detect_sessions(url: ParsedUrl, det: DetectorSet, report_id: str = "") -> list[Finding]:
    """SessionId/TokenId findings from query and matrix parameters."""
    findings = _pair_key_findings(url, det.session_keys, FindingCategory.SESSION_ID, det, report_id)
    findings.extend(
        _pair_key_findings(url, det.token_keys, FindingCategory.TOKEN_ID, det, report_id)
    )
    return findings


def detect_location(url: ParsedUrl, det: DetectorSet, report_id: str = "") -> list[Finding]:
    """Location findings from explicit address-style query keys only."""
    return _pair_key_findings(url, det.location_keys, FindingCategory.LOCATION, det, report_id)


def detect_phone_and_contact(
    description: str, det: DetectorSet, report_id: str = ""
) -> list[Finding]:
    """Contact-request phrases, plus digit runs that look like phone numbers.

    Overlapping phrase matches collapse into the earliest (longest) one.  A
    digit run (7..15 digits, separators allowed) counts when it begins within
    `contact_window` characters after a contact phrase, or on its own with at
    least `standalone_min_digits` digits.
    """
    findings: list[Finding] = []
    matches: list[Span] = []
    for phrase in sorted(det.contact_phrases):
        matches.extend(m.span() for m in _needle_pattern(phrase).finditer(description))
    matches.sort(key=lambda span: (span[0], span[0] - span[1]))
    phrase_ends: list[int] = []
    last_end = -1
    for start, end in matches:
        if start < last_end:
            continue
        findings.append(
            Finding.at(
                report_id, FindingCategory.CONTACT_REQUEST, SourceField.DESCRIPTION,
                description, start, end,
            )
        )
        phrase_ends.append(end)
        last_end = end
    for m in _PHONE_RUN_RE.finditer(description):
        digits = sum(ch.isdigit() for ch in m.group())
        if not det.phone_min_digits <= digits <= det.phone_max_digits:
            continue
        near_phrase = any(end <= m.start() <= end + det.contact_window for end in phrase_ends)
        if near_phrase or digits >= det.standalone_min_digits:
            findings.append(
                Finding.at(
                    report_id, FindingCategory.PHONE_NUMBER, SourceField.DESCRIPTION,
                    description, m.start(), m.end(),
                )
            )
    return findings


def classify_ip_field(ip: str) -> FieldState:
    """Classify the de-identification state of the stored ip field."""
    if ip == "":
        return FieldState.DELETED
    m = _IP_FIELD_RE.match(ip)
    if not m or any(int(octet) > 255 for octet in m.groups()):
        raise MalformedIpError(f"not a dotted quad: {ip!r}")
    if ip == "10.2.0.0":
        return FieldState.FULLY_MASKED
    if int(m.group(3)) == 0 and int(m.group(4)) == 0:
        return FieldState.PARTIALLY_ANONYMIZED
    return FieldState.UNTOUCHED


def detect_ip_in_text(
    text: str,
    field: SourceField,
    det: DetectorSet = DEFAULT_DETECTORS,
    report_id: str = "",
    view: _DecodedView | None = None,
) -> list[Finding]:
    """One finding per embedded dotted-quad (octets 0..255) in the decoded text."""
    if view is None:
        view = _decode_view(text, det.decode_rounds, False)
    findings = []
    for m in _IPV4_RE.finditer(view.text):
        start, end = view.raw_span(m.start(), m.end())
        findings.append(Finding.at(report_id, FindingCategory.IP_ADDRESS, field, text, start, end))
    return findings


def run_all(report: CrashReport, det: DetectorSet = DEFAULT_DETECTORS) -> list[Finding]:
    """Run every detector on its applicable fields; findings come back sorted.

    A malformed ip field becomes a diagnostic IP_ADDRESS finding over the
    whole field instead of aborting the record.
    """
    findings: list[Finding] = []
    parsed = None
    if report.url:
        parsed = parse_url(report.url)
        views = _UrlViews(parsed, det.decode_rounds)
        findings.extend(detect_sql_injection(parsed, det, report.id, views))
        findings.extend(detect_directory_traversal(parsed, det, report.id, views))
        findings.extend(detect_lfi(parsed, det, report.id, views))
        findings.extend(detect_xss(parsed, det, report.id, views))
        findings.extend(detect_phishing(parsed, det, report.id))
        findings.extend(detect_sessions(parsed, det, report.id))
        findings.extend(detect_location(parsed, det, report.id))
        findings.extend(detect_emails(report.url, SourceField.URL, det, report.id, views.full))
        findings.extend(
            detect_ip_in_text(report.url, SourceField.URL, det, report.id, views.full)
        )
    if report.description:
        desc_view = _decode_view(report.description, det.decode_rounds, False)
        findings.extend(
            detect_emails(report.description, SourceField.DESCRIPTION, det, report.id, desc_view)
        )
        findings.extend(
            detect_ip_in_text(report.description, SourceField.DESCRIPTION, det, report.id, desc_view)
        )
        findings.extend(detect_phone_and_contact(report.description, det, report.id))
    findings.extend(detect_credentials(report, det, parsed))
    if report.ip:
        try:
            classify_ip_field(report.ip)
        except MalformedIpError:
            findings.append(
                Finding.at(
                    report.id, FindingCategory.IP_ADDRESS, SourceField.IP,
                    report.ip, 0, len(report.ip),
                )
            )
    findings.sort(key=Finding.sort_key)
    return findings


def load_watchlist(path: str) -> frozenset[str]:
    """Read a phishing watchlist file: one registered domain per line, '#' comments."""
    entries = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            entry = line.split("#", 1)[0].strip().lower()
            if entry:
                entries.add(entry)
    return frozenset(entries)
