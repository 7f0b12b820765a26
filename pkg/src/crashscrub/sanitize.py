"""Keyword-anchored masking of sensitive values in URLs and descriptions.

The masking rule, applied in a single left-to-right scan:

* a configured keyword matches at a word boundary (start of text, or a
  character on the left that is neither a word character nor '*'),
  longest keyword first,
* it is followed by a separator: one or more characters that are neither
  word characters nor '*' nor '?',
* keyword and separator are kept, the next min(4, remaining) characters --
  of any class, including spaces -- are replaced by the fixed "****" token,
* scanning resumes right after the emitted mask.

Secrets shorter than four characters are consumed entirely but still emit
the full four-star token, so the mask never reveals a short secret's exact
length.  Excluding '*' from the separator class makes the whole operation
idempotent (re-scrubbing masked text re-masks the asterisks onto
themselves); excluding '?' keeps a keyword-named path segment such as
"/Login?token=..." from masking straight through the query delimiter.

The scheme://host[:port] prefix of a URL is never touched; scheme-less or
malformed URLs are treated as entirely maskable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .model import CrashReport, SourceField
from .urltools import authority_prefix_end, parse_url

MASK_TOKEN = "****"

DEFAULT_URL_KEYWORDS = [
    "username",
    "user",
    "login",
    "password",
    "pass",
    "passwd",
    "pwd",
    "sessionid",
    "session",
    "sid",
    "jsessionid",
    "tokenid",
    "token",
    "email",
    "phone",
]

DEFAULT_DESCRIPTION_KEYWORDS = ["username", "password", "email", "phone"]

_KEYWORD_RE = re.compile(r"^\w+$", re.ASCII)


@dataclass(frozen=True)
class SanitizerConfig:
    """Keyword lists and masking parameters.

    Keyword entries must be plain word characters; the engine sorts each
    list longest-first so e.g. "sessionid" wins over "session" over "sid".
    """

    url_keywords: tuple[str, ...] = tuple(DEFAULT_URL_KEYWORDS)
    description_keywords: tuple[str, ...] = tuple(DEFAULT_DESCRIPTION_KEYWORDS)
    mask_token: str = MASK_TOKEN
    mask_length: int = 4
    case_insensitive: bool = True

    def __post_init__(self):
        for name, keywords in (
            ("url_keywords", self.url_keywords),
            ("description_keywords", self.description_keywords),
        ):
            if not keywords:
                raise ValueError(f"{name} must not be empty")
            for kw in keywords:
                if not _KEYWORD_RE.match(kw):
                    raise ValueError(f"{name} entry {kw!r} must be non-empty word characters")
        if len(self.mask_token) != self.mask_length:
            raise ValueError("mask_token length must equal mask_length")
        # normalize list inputs so configs hash/compare cleanly
        object.__setattr__(self, "url_keywords", tuple(self.url_keywords))
        object.__setattr__(self, "description_keywords", tuple(self.description_keywords))


@dataclass(frozen=True)
class MaskEvent:
    """Audit record of one mask application.

    `span_masked` is the half-open range of *replaced* characters in the
    original text; `original_length` is its width (1..mask_length).
    """

    field: SourceField
    keyword: str
    span_masked: tuple[int, int]
    original_length: int


@dataclass(frozen=True)
class SanitizedReport:
    report: CrashReport
    events: tuple[MaskEvent, ...] = field(default_factory=tuple)


def _compiled(keywords: tuple[str, ...], case_insensitive: bool) -> re.Pattern:
    ordered = sorted(keywords, key=len, reverse=True)
    flags = re.IGNORECASE if case_insensitive else 0
    # group 1: keyword at a left word boundary; group 2: separator run.
    # '*' is excluded from the separator (so existing masks re-mask to
    # themselves) and blocks the left boundary (so a mask can never unblock
    # the keyword after it); '?' is excluded from the separator so the query
    # delimiter never acts as one.  Both keep re-scrubbing a fixpoint.
    return re.compile(
        r"(?<![\w*])(" + "|".join(re.escape(k) for k in ordered) + r")([^\w*?]+)", flags
    )


_PATTERN_CACHE: dict[tuple, re.Pattern] = {}


def _pattern_for(keywords: tuple[str, ...], case_insensitive: bool) -> re.Pattern:
    key = (keywords, case_insensitive)
    pattern = _PATTERN_CACHE.get(key)
    if pattern is None:
        pattern = _PATTERN_CACHE[key] = _compiled(keywords, case_insensitive)
    return pattern


def mask_text(
    text: str,
    keywords: tuple[str, ...] | list[str],
    config: SanitizerConfig,
    field: SourceField = SourceField.DESCRIPTION,
    offset: int = 0,
) -> tuple[str, list[MaskEvent]]:
    """Apply the masking rule over `text`; returns (masked, events).

    `offset` shifts event spans, for callers masking a slice of a larger
    string.  Text without any keyword+separator occurrence comes back
    unchanged with no events.
    """
    pattern = _pattern_for(tuple(keywords), config.case_insensitive)
    out: list[str] = []
    events: list[MaskEvent] = []
    pos = 0
    n = len(text)
    search_from = 0
    while True:
        m = pattern.search(text, search_from)
        if m is None:
            break
        sep_end = m.end(2)
        take = min(config.mask_length, n - sep_end)
        if take == 0:
            # separator runs to the end of the text: nothing to hide
            search_from = m.start(1) + 1
            continue
        out.append(text[pos:sep_end])
        out.append(config.mask_token)
        events.append(
            MaskEvent(
                field=field,
                keyword=m.group(1).lower() if config.case_insensitive else m.group(1),
                span_masked=(offset + sep_end, offset + sep_end + take),
                original_length=take,
            )
        )
        pos = sep_end + take
        search_from = pos
    out.append(text[pos:])
    return "".join(out), events


def sanitize_url(raw_url: str, config: SanitizerConfig) -> tuple[str, list[MaskEvent]]:
    """Mask the path/query/fragment of a URL; the authority prefix is copied verbatim.

    Event spans are relative to the full URL.  Scheme-less input has no
    authority prefix, so the entire text is maskable.
    """
    split = authority_prefix_end(raw_url)
    prefix, suffix = raw_url[:split], raw_url[split:]
    masked, events = mask_text(
        suffix, config.url_keywords, config, field=SourceField.URL, offset=split
    )
    return prefix + masked, events


def sanitize_report(report: CrashReport, config: SanitizerConfig) -> SanitizedReport:
    """Mask the url and description fields of a report; all others stay untouched."""
    events: list[MaskEvent] = []
    url = report.url
    if url:
        url, url_events = sanitize_url(url, config)
        events.extend(url_events)
    description = report.description
    if description:
        description, desc_events = mask_text(description, config.description_keywords, config)
        events.extend(desc_events)
    return SanitizedReport(
        report=replace(report, url=url, description=description),
        events=tuple(events),
    )


def readability_check(original_url: str, masked_url: str) -> bool:
    """True when the masked URL still reads for debugging.

    Requires an identical scheme and host, the same number of path segments,
    and no non-empty masked path segment consisting entirely of '*'.  Query
    and fragment differences never count against readability.
    """
    original = parse_url(original_url)
    masked = parse_url(masked_url)
    if original.scheme != masked.scheme or original.host != masked.host:
        return False
    if len(original.path_segments) != len(masked.path_segments):
        return False
    for segment in masked.path_segments:
        if segment and set(segment) == {"*"}:
            return False
    return True


def load_keywords(path: str) -> list[str]:
    """Read a keyword list file: one keyword per line, '#' comments, blanks ignored."""
    keywords: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            entry = line.split("#", 1)[0].strip()
            if entry:
                keywords.append(entry)
    return keywords
