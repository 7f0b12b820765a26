"""Deterministic synthetic crash-report corpora with planted ground truth.

Every planted item comes from a template built to trigger exactly one
detector finding of its category and nothing else; benign templates trigger
nothing at all.  That makes recall and precision against the emitted labels
exactly 1.0 by construction, and planted counts are exact obligations.

Randomness comes from `random.Random(seed)` (Mersenne Twister), so a fixed
spec yields byte-identical corpora across runs and platforms.

For session/token items, `path_embedded_fraction` of the planted URLs carry
the keyword as a matrix parameter inside a path segment with a 1-3 character
value, e.g. "/account/report;jsessionid=ab1/view/page.html".  Masking such a
value consumes the following '/' and merges two path segments, which is the
URL shape that defeats the readability check; query-planted items always
stay readable.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .model import CrashReport, FindingCategory, SourceField

DEFAULT_LOCALE_POOL = (
    "Windows NT 10.0",
    "Windows NT 6.1",
    "Macintosh; Intel Mac OS X 10_15",
    "X11; Linux x86_64",
    "X11; Ubuntu; Linux i686",
)

_BENIGN_HOSTS = (
    "news.example.org",
    "shop.example.net",
    "portal.example.com",
    "forum.example.io",
    "wiki.example.edu",
)

_BENIGN_PATHS = (
    "/articles/2021/review.html",
    "/shop/cart/view",
    "/media/gallery/item42",
    "/docs/getting-started",
    "/weather/today",
    "/scores/live",
)

_BENIGN_QUERIES = ("", "?page=3", "?ref=home&tab=2", "?lang=en", "?sort=newest")

_BENIGN_DESCRIPTIONS = (
    "",
    "the tab froze while scrolling",
    "crashed after opening a second window",
    "video stopped at page 12",
    "it keeps crashing on startup",
    "happened twice this morning",
)

_PHISHING_BRANDS = ("wellsfargo.com", "paypal.com")

_LETTERS = "abcdefghijklmnopqrstuvwxyz"
_DIGITS = "0123456789"


class GenerationConfigError(ValueError):
    """The spec plants a category the generator has no template for."""


@dataclass(frozen=True)
class CorpusSpec:
    """What to generate: benign background plus exact planted counts per category."""

    seed: int = 0
    benign_count: int = 0
    planted: dict = field(default_factory=dict)
    path_embedded_fraction: float = 0.08
    locale_pool: tuple[str, ...] = DEFAULT_LOCALE_POOL

    def __post_init__(self):
        if not 0.0 <= self.path_embedded_fraction <= 1.0:
            raise ValueError("path_embedded_fraction must be within [0, 1]")
        if self.benign_count < 0:
            raise ValueError("benign_count must be >= 0")
        normalized = {}
        for category, count in dict(self.planted).items():
            if not isinstance(category, FindingCategory):
                category = FindingCategory.parse(str(category))
            if count < 0:
                raise ValueError(f"planted count for {category.value} must be >= 0")
            normalized[category] = int(count)
        object.__setattr__(self, "planted", normalized)
        object.__setattr__(self, "locale_pool", tuple(self.locale_pool))


@dataclass(frozen=True)
class TruthLabel:
    record_id: str
    category: FindingCategory
    field: SourceField
    start: int
    end: int


@dataclass
class GroundTruth:
    labels: list[TruthLabel] = field(default_factory=list)

    def by_record(self) -> dict[str, list[TruthLabel]]:
        out: dict[str, list[TruthLabel]] = {}
        for label in self.labels:
            out.setdefault(label.record_id, []).append(label)
        return out


def _secret_value(rng: random.Random, min_len: int = 8, max_len: int = 32) -> str:
    """Random word-character secret; digit runs capped at 4 so a planted value
    can never double as a phone number."""
    length = rng.randrange(min_len, max_len + 1)
    chars = []
    digit_run = 0
    for _ in range(length):
        pool = _LETTERS if digit_run >= 4 else _LETTERS + _DIGITS
        c = rng.choice(pool)
        digit_run = digit_run + 1 if c in _DIGITS else 0
        chars.append(c)
    return "".join(chars)


@dataclass
class _Background:
    scheme: str
    host: str
    url: str
    description: str
    platform: str
    ip: str
    timestamp: int


def _background(rng: random.Random, locale_pool: tuple[str, ...]) -> _Background:
    scheme = rng.choice(("http", "https"))
    host = rng.choice(_BENIGN_HOSTS)
    url = scheme + "://" + host + rng.choice(_BENIGN_PATHS) + rng.choice(_BENIGN_QUERIES)
    ip = rng.choice(("", "10.2.0.0", f"{rng.randrange(11, 224)}.{rng.randrange(0, 256)}.0.0"))
    return _Background(
        scheme=scheme,
        host=host,
        url=url,
        description=rng.choice(_BENIGN_DESCRIPTIONS),
        platform=rng.choice(locale_pool),
        ip=ip,
        timestamp=rng.randrange(1_230_000_000, 1_420_000_000),
    )


def _url_record(rid: str, bg: _Background, url: str) -> CrashReport:
    return CrashReport(
        id=rid, url=url, description=bg.description,
        platform=bg.platform, ip=bg.ip, timestamp=bg.timestamp,
    )


def _desc_record(rid: str, bg: _Background, description: str) -> CrashReport:
    return CrashReport(
        id=rid, url=bg.url, description=description,
        platform=bg.platform, ip=bg.ip, timestamp=bg.timestamp,
    )


def _label_value(rid, category, fld, text, value) -> TruthLabel:
    start = text.index(value)
    return TruthLabel(rid, category, fld, start, start + len(value))


def _plant_pair_url(rng, rid, bg, category, key, embedded: bool):
    if embedded:
        value = _secret_value(rng, 1, 3)
        url = f"{bg.scheme}://{bg.host}/account/report;{key}={value}/view/page.html"
    else:
        value = _secret_value(rng)
        url = f"{bg.scheme}://{bg.host}{rng.choice(_BENIGN_PATHS)}?{key}={value}"
    prefix = url.rindex(f"{key}=") + len(key) + 1
    label = TruthLabel(rid, category, SourceField.URL, prefix, prefix + len(value))
    return _url_record(rid, bg, url), [label]


def _plant_session(rng, rid, bg, embedded):
    key = "jsessionid" if embedded else rng.choice(("sessionid", "session", "sid"))
    return _plant_pair_url(rng, rid, bg, FindingCategory.SESSION_ID, key, embedded)


def _plant_token(rng, rid, bg, embedded):
    key = "tokenid" if embedded else rng.choice(("tokenid", "token"))
    return _plant_pair_url(rng, rid, bg, FindingCategory.TOKEN_ID, key, embedded)


def _plant_credential(rng, rid, bg, embedded):
    keyword = rng.choice(("username", "password"))
    value = _secret_value(rng, 1, 3) if rng.random() < 0.1 else _secret_value(rng)
    description = f"my {keyword}: {value} then it crashed"
    start = len(f"my {keyword}: ")
    label = TruthLabel(
        rid, FindingCategory.CREDENTIAL, SourceField.DESCRIPTION, start, start + len(value)
    )
    return _desc_record(rid, bg, description), [label]


def _plant_email(rng, rid, bg, embedded):
    address = f"{_secret_value(rng, 3, 10)}@{rng.choice(('gmail.example', 'mail.example', 'inbox.example'))}"
    if rng.random() < 0.5:
        url = f"{bg.scheme}://{bg.host}/activate.php?email={address}"
        label = _label_value(rid, FindingCategory.EMAIL_ADDRESS, SourceField.URL, url, address)
        return _url_record(rid, bg, url), [label]
    description = f"you can write to {address} anytime"
    label = _label_value(
        rid, FindingCategory.EMAIL_ADDRESS, SourceField.DESCRIPTION, description, address
    )
    return _desc_record(rid, bg, description), [label]


def _plant_ip(rng, rid, bg, embedded):
    value = (
        f"{rng.randrange(11, 224)}.{rng.randrange(0, 256)}"
        f".{rng.randrange(1, 255)}.{rng.randrange(1, 255)}"
    )
    url = f"{bg.scheme}://{bg.host}/submit.php?getpostdata=get&site=submit&ip={value}&ref=000"
    label = _label_value(rid, FindingCategory.IP_ADDRESS, SourceField.URL, url, value)
    return _url_record(rid, bg, url), [label]


def _plant_location(rng, rid, bg, embedded):
    value = f"{rng.randrange(1, 99)}%20{rng.choice(('Main', 'Oak', 'Pine'))}%20St"
    url = f"{bg.scheme}://{bg.host}/register?address={value}"
    label = _label_value(rid, FindingCategory.LOCATION, SourceField.URL, url, value)
    return _url_record(rid, bg, url), [label]


def _plant_phone(rng, rid, bg, embedded):
    digits = [rng.choice(_DIGITS) for _ in range(10)]
    style = rng.randrange(3)
    if style == 0:
        number = "".join(digits)
    elif style == 1:
        number = "{}{}{}-{}{}{}-{}{}{}{}".format(*digits)
    else:
        number = "{}{}{} {}{}{} {}{}{}{}".format(*digits)
    description = f"the crash happened while dialing {number} yesterday"
    label = _label_value(
        rid, FindingCategory.PHONE_NUMBER, SourceField.DESCRIPTION, description, number
    )
    return _desc_record(rid, bg, description), [label]


def _plant_contact(rng, rid, bg, embedded):
    suffix = rng.choice(("about the crash on my laptop", "regarding this error", "for more details"))
    description = f"please contact me {suffix}"
    label = TruthLabel(
        rid, FindingCategory.CONTACT_REQUEST, SourceField.DESCRIPTION, 0, len("please contact me")
    )
    return _desc_record(rid, bg, description), [label]


def _plant_sqli(rng, rid, bg, embedded):
    if rng.random() < 0.5:
        value = "x%2527%20union%20select%20user_password%20from%20users"
        url = f"{bg.scheme}://{bg.host}/photo/gallery/search.php?q={value}"
    else:
        value = "select+name+from+users"
        url = f"{bg.scheme}://{bg.host}/lookup.php?q={value}"
    label = _label_value(rid, FindingCategory.SQL_INJECTION, SourceField.URL, url, value)
    return _url_record(rid, bg, url), [label]


def _plant_traversal(rng, rid, bg, embedded):
    depth = rng.randrange(2, 5)
    value = ("%2e%2e%2f" if rng.random() < 0.3 else "../") * depth
    url = f"{bg.scheme}://{bg.host}/de_old/index.html?prm_popup={value}"
    label = _label_value(rid, FindingCategory.DIRECTORY_TRAVERSAL, SourceField.URL, url, value)
    return _url_record(rid, bg, url), [label]


def _plant_lfi(rng, rid, bg, embedded):
    value = "%2Fetc%2Fpasswd" if rng.random() < 0.3 else "/etc/passwd"
    url = f"{bg.scheme}://{bg.host}/view.php?file={value}"
    label = _label_value(rid, FindingCategory.LOCAL_FILE_INCLUSION, SourceField.URL, url, value)
    return _url_record(rid, bg, url), [label]


def _plant_xss(rng, rid, bg, embedded):
    if rng.random() < 0.5:
        value = "document.cookie"
        url = f"{bg.scheme}://{bg.host}/page.php?q={value}"
    else:
        value = "%3Cscript%3Ealert%281%29%3C%2Fscript%3E"
        url = f"{bg.scheme}://{bg.host}/page.php?html={value}"
    label = _label_value(rid, FindingCategory.CROSS_SITE_SCRIPTING, SourceField.URL, url, value)
    return _url_record(rid, bg, url), [label]


def _plant_phishing(rng, rid, bg, embedded):
    brand = rng.choice(_PHISHING_BRANDS)
    url = f"{bg.scheme}://{bg.host}/www.{brand}/"
    label = _label_value(rid, FindingCategory.PHISHING, SourceField.URL, url, brand)
    return _url_record(rid, bg, url), [label]


_TEMPLATES = {
    FindingCategory.SQL_INJECTION: _plant_sqli,
    FindingCategory.DIRECTORY_TRAVERSAL: _plant_traversal,
    FindingCategory.LOCAL_FILE_INCLUSION: _plant_lfi,
    FindingCategory.CROSS_SITE_SCRIPTING: _plant_xss,
    FindingCategory.PHISHING: _plant_phishing,
    FindingCategory.IP_ADDRESS: _plant_ip,
    FindingCategory.EMAIL_ADDRESS: _plant_email,
    FindingCategory.LOCATION: _plant_location,
    FindingCategory.CREDENTIAL: _plant_credential,
    FindingCategory.SESSION_ID: _plant_session,
    FindingCategory.TOKEN_ID: _plant_token,
    FindingCategory.PHONE_NUMBER: _plant_phone,
    FindingCategory.CONTACT_REQUEST: _plant_contact,
}

# categories whose planted URLs take the path-embedded (matrix) form
_PATH_EMBEDDABLE = (FindingCategory.SESSION_ID, FindingCategory.TOKEN_ID)


def iter_generate(spec: CorpusSpec) -> Iterator[tuple[CrashReport, list[TruthLabel]]]:
    """Yield (report, labels) pairs lazily; memory stays flat for huge corpora."""
    unsupported = [c.value for c in spec.planted if c not in _TEMPLATES]
    if unsupported:
        raise GenerationConfigError(f"no template for planted categories: {unsupported}")
    rng = random.Random(spec.seed)
    seq = 0

    def next_id() -> str:
        nonlocal seq
        seq += 1
        return f"r{seq:07d}"

    for _ in range(spec.benign_count):
        bg = _background(rng, spec.locale_pool)
        yield CrashReport(
            id=next_id(), url=bg.url, description=bg.description,
            platform=bg.platform, ip=bg.ip, timestamp=bg.timestamp,
        ), []

    for category in FindingCategory:
        count = spec.planted.get(category, 0)
        if count == 0:
            continue
        template = _TEMPLATES[category]
        embedded_slots: set[int] = set()
        if category in _PATH_EMBEDDABLE:
            k = round(spec.path_embedded_fraction * count)
            embedded_slots = set(rng.sample(range(count), k))
        for i in range(count):
            bg = _background(rng, spec.locale_pool)
            yield template(rng, next_id(), bg, i in embedded_slots)


def generate(spec: CorpusSpec) -> tuple[list[CrashReport], GroundTruth]:
    """Materialize a corpus and its ground truth; deterministic in the spec."""
    corpus: list[CrashReport] = []
    truth = GroundTruth()
    for report, labels in iter_generate(spec):
        corpus.append(report)
        truth.labels.extend(labels)
    return corpus, truth


def report_to_json_line(report: CrashReport) -> str:
    return json.dumps(
        {
            "id": report.id,
            "url": report.url,
            "description": report.description,
            "platform": report.platform,
            "ip": report.ip,
            "timestamp": report.timestamp,
        },
        separators=(",", ":"),
    )


def label_to_json_line(label: TruthLabel) -> str:
    return json.dumps(
        {
            "record_id": label.record_id,
            "category": label.category.value,
            "field": label.field.value,
            "start": label.start,
            "end": label.end,
        },
        separators=(",", ":"),
    )


def write_corpus_jsonl(reports: Iterable[CrashReport], stream: IO[str]) -> int:
    n = 0
    for report in reports:
        stream.write(report_to_json_line(report) + "\n")
        n += 1
    return n


def write_truth_jsonl(labels: Iterable[TruthLabel], stream: IO[str]) -> int:
    n = 0
    for label in labels:
        stream.write(label_to_json_line(label) + "\n")
        n += 1
    return n


def read_truth_jsonl(stream: IO[str]) -> GroundTruth:
    truth = GroundTruth()
    for line in stream:
        if not line.strip():
            continue
        obj = json.loads(line)
        truth.labels.append(
            TruthLabel(
                record_id=obj["record_id"],
                category=FindingCategory.parse(obj["category"]),
                field=SourceField(obj["field"]),
                start=int(obj["start"]),
                end=int(obj["end"]),
            )
        )
    return truth
