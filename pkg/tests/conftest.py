"""Shared test helpers: the naive masking oracle and fuzz input generators."""

import random
import re

WORD_RE = re.compile(r"\w")


def _is_word(c: str) -> bool:
    return bool(WORD_RE.match(c))


def _blocks_boundary(c: str) -> bool:
    return _is_word(c) or c == "*"


def _is_sep(c: str) -> bool:
    return not _is_word(c) and c not in "*?"


def naive_mask(text, keywords, case_insensitive=True, mask_token="****", mask_length=4):
    """Quadratic reference masker: for every position, for every keyword,
    test boundary + match + separator and mask.  Independent of the engine's
    single-pass regex scan."""
    ordered = sorted(keywords, key=len, reverse=True)
    flags = re.IGNORECASE if case_insensitive else 0
    patterns = [(kw, re.compile(re.escape(kw), flags)) for kw in ordered]
    out = []
    events = []
    i, n = 0, len(text)
    while i < n:
        masked_here = False
        if i == 0 or not _blocks_boundary(text[i - 1]):
            for kw, pattern in patterns:
                if not pattern.match(text, i):
                    continue
                j = i + len(kw)
                s = j
                while s < n and _is_sep(text[s]):
                    s += 1
                if s > j and s < n:
                    take = min(mask_length, n - s)
                    out.append(text[i:s])
                    out.append(mask_token)
                    events.append((text[i:j].lower() if case_insensitive else text[i:j], s, s + take))
                    i = s + take
                    masked_here = True
                    break
        if not masked_here:
            out.append(text[i])
            i += 1
    return "".join(out), events


# case-stable alphabet: no characters whose lower() changes length or whose
# regex case folding diverges from str.lower()
FUZZ_CHARS = "abcdefghij XYZ0123456789=&?/:;.,!-_%+#@()*~éЖ中"

SEPARATOR_PIECES = ["=", " ", ": ", "&", "?", "/", ";", "-", "   ", "****", "*", "%20", "!", "=?", " *"]
SHORT_PIECES = ["ab", "a", "x1", "", "q", "hunter2", "abc"]


def fuzz_text(rng: random.Random, keywords) -> str:
    """Adversarial masking input: keywords in random case, separators, mask
    tokens, short tails, keyword fragments."""
    parts = []
    for _ in range(rng.randrange(0, 12)):
        r = rng.random()
        if r < 0.30:
            kw = rng.choice(keywords)
            parts.append("".join(c.upper() if rng.random() < 0.3 else c for c in kw))
        elif r < 0.45:
            parts.append(rng.choice(SEPARATOR_PIECES))
        elif r < 0.60:
            parts.append(rng.choice(SHORT_PIECES))
        else:
            parts.append("".join(rng.choice(FUZZ_CHARS) for _ in range(rng.randrange(0, 8))))
    return "".join(parts)


_FUZZ_HOSTS = ["a.com", "X.example", "sub.domain.org", "10.2.3.4", "h", "shop.example.net:8080"]
_FUZZ_PATH_PIECES = ["a", "Login", "token", "index.html", "de_old", "x%20y", "img42", "", "report;sid=abc"]
_FUZZ_KEYS = ["username", "password", "sid", "token", "q", "page", "ref", "x", "user"]
_FUZZ_VALUES = ["", "a", "ab", "abc", "hunter2", "880217f4", "x%2527%20union", "../..", "v+w"]


def fuzz_url(rng: random.Random) -> str:
    """Random URL-shaped text, mostly well-formed, sometimes scheme-less or messy."""
    r = rng.random()
    if r < 0.75:
        scheme = rng.choice(["http", "https", "ftp"])
        prefix = scheme + "://"
        if rng.random() < 0.1:
            prefix += "bob@"
        prefix += rng.choice(_FUZZ_HOSTS)
    elif r < 0.9:
        prefix = rng.choice(_FUZZ_HOSTS)
    else:
        prefix = ""
    path = "".join("/" + rng.choice(_FUZZ_PATH_PIECES) for _ in range(rng.randrange(0, 4)))
    url = prefix + path
    if rng.random() < 0.7:
        pairs = [
            rng.choice(_FUZZ_KEYS) + "=" + rng.choice(_FUZZ_VALUES)
            for _ in range(rng.randrange(1, 4))
        ]
        url += "?" + "&".join(pairs)
    if rng.random() < 0.15:
        url += "#frag" + rng.choice(_FUZZ_VALUES)
    return url


def apply_mask_events(original: str, events, mask_token: str = "****") -> str:
    """Replay recorded mask events over the original text."""
    out = []
    pos = 0
    for event in sorted(events, key=lambda e: e.span_masked[0]):
        start, end = event.span_masked
        out.append(original[pos:start])
        out.append(mask_token)
        pos = end
    out.append(original[pos:])
    return "".join(out)
