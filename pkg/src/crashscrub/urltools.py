"""Tolerant URL decomposition and bounded percent-decoding.

The parser never raises: anything it cannot make structural sense of
degrades to an empty host with the input preserved in the path, and a
`parsed_clean` flag records whether strict parsing succeeded.  All parts
carry character spans into the original text so findings can point at the
raw (still percent-encoded) input.

Decoding is bounded (default two rounds, enough for the double-encoded
payloads seen in the wild) and returns an offset map from decoded
characters back to raw spans.
"""

from __future__ import annotations

import codecs
import re
from dataclasses import dataclass

Span = tuple[int, int]

_SCHEME_AUTHORITY_RE = re.compile(r"^([A-Za-z][A-Za-z0-9+.\-]*)://")
_HOSTLIKE_RE = re.compile(r"^[A-Za-z0-9.\-]+(?::\d{1,5})?$")
_HEX_DIGITS = set("0123456789abcdefABCDEF")


@dataclass(frozen=True)
class QueryPair:
    """One key/value unit from the query string or from matrix parameters.

    `matrix` marks pairs lifted out of ";key=value" path-segment parameters;
    they are extra views of path content and are excluded from reassembly.
    `joined` is False for query chunks that had no '=' at all.
    """

    key: str
    value: str
    key_span: Span
    value_span: Span
    matrix: bool = False
    joined: bool = True


@dataclass(frozen=True)
class ParsedUrl:
    """Structural decomposition of one raw URL string.

    `prefix_end` is the offset where the scheme+authority prefix ends (0 when
    there is none); `raw[:prefix_end]` is always the verbatim authority text.
    """

    raw: str
    scheme: str = ""
    host: str = ""
    port: int | None = None
    userinfo: str = ""
    host_span: Span = (0, 0)
    path_segments: tuple[str, ...] = ()
    path_segment_spans: tuple[Span, ...] = ()
    path_leading_slash: bool = False
    query_pairs: tuple[QueryPair, ...] = ()
    fragment: str = ""
    has_query: bool = False
    has_fragment: bool = False
    prefix_end: int = 0
    parsed_clean: bool = False

    def reassemble(self) -> str:
        """Rebuild the URL from parts; equals `raw` whenever `parsed_clean`."""
        out = [self.raw[: self.prefix_end]]
        if self.path_segments:
            lead = "/" if self.path_leading_slash else ""
            out.append(lead + "/".join(self.path_segments))
        if self.has_query:
            chunks = []
            for pair in self.query_pairs:
                if pair.matrix:
                    continue
                chunks.append(pair.key + ("=" + pair.value if pair.joined else ""))
            out.append("?" + "&".join(chunks))
        if self.has_fragment:
            out.append("#" + self.fragment)
        return "".join(out)


def _split_host_port(hostport: str, base_offset: int) -> tuple[str, int | None, Span, bool]:
    """Split a host[:port] chunk; returns (host_lower, port, host_span, port_ok)."""
    host_text = hostport
    port = None
    port_ok = True
    head, sep, tail = hostport.rpartition(":")
    if sep:
        if tail.isdigit():
            port = int(tail)
            host_text = head
            if not 1 <= port <= 65535:
                port = None
                port_ok = False
        else:
            port_ok = False
    span = (base_offset, base_offset + len(host_text))
    return host_text.lower(), port, span, port_ok


def _split_path(path_text: str, base_offset: int) -> tuple[bool, list[str], list[Span]]:
    if path_text == "":
        return False, [], []
    leading = path_text.startswith("/")
    body = path_text[1:] if leading else path_text
    segments: list[str] = []
    spans: list[Span] = []
    pos = base_offset + (1 if leading else 0)
    for piece in body.split("/"):
        segments.append(piece)
        spans.append((pos, pos + len(piece)))
        pos += len(piece) + 1
    return leading, segments, spans


def _query_pairs(query_text: str, base_offset: int) -> list[QueryPair]:
    pairs: list[QueryPair] = []
    pos = base_offset
    for chunk in query_text.split("&"):
        eq = chunk.find("=")
        if eq >= 0:
            key, value = chunk[:eq], chunk[eq + 1 :]
            pairs.append(
                QueryPair(
                    key=key,
                    value=value,
                    key_span=(pos, pos + eq),
                    value_span=(pos + eq + 1, pos + len(chunk)),
                )
            )
        else:
            pairs.append(
                QueryPair(
                    key=chunk,
                    value="",
                    key_span=(pos, pos + len(chunk)),
                    value_span=(pos + len(chunk), pos + len(chunk)),
                    joined=False,
                )
            )
        pos += len(chunk) + 1
    return pairs


def _matrix_pairs(segment: str, segment_span: Span) -> list[QueryPair]:
    if ";" not in segment:
        return []
    pairs: list[QueryPair] = []
    pos = segment_span[0]
    pieces = segment.split(";")
    pos += len(pieces[0]) + 1
    for piece in pieces[1:]:
        eq = piece.find("=")
        if eq > 0:
            pairs.append(
                QueryPair(
                    key=piece[:eq],
                    value=piece[eq + 1 :],
                    key_span=(pos, pos + eq),
                    value_span=(pos + eq + 1, pos + len(piece)),
                    matrix=True,
                )
            )
        pos += len(piece) + 1
    return pairs


def parse_url(raw: str) -> ParsedUrl:
    """Best-effort decomposition of `raw`; never raises.

    Inputs without a "scheme://" prefix are treated as scheme-less: a leading
    hostname-like token becomes the host, otherwise the whole text lands in
    the path segments with host="".
    """
    frag_idx = raw.find("#")
    if frag_idx >= 0:
        pre, fragment, has_fragment = raw[:frag_idx], raw[frag_idx + 1 :], True
    else:
        pre, fragment, has_fragment = raw, "", False

    q_idx = pre.find("?")
    if q_idx >= 0:
        base, query_text, has_query = pre[:q_idx], pre[q_idx + 1 :], True
        query_offset = q_idx + 1
    else:
        base, query_text, has_query = pre, "", False
        query_offset = len(pre)

    scheme = ""
    host = ""
    port: int | None = None
    userinfo = ""
    host_span: Span = (0, 0)
    prefix_end = 0
    degraded = False
    port_ok = True

    m = _SCHEME_AUTHORITY_RE.match(base)
    if m:
        scheme = m.group(1).lower()
        auth_start = m.end()
        slash = base.find("/", auth_start)
        auth_end = slash if slash >= 0 else len(base)
        authority = base[auth_start:auth_end]
        prefix_end = auth_end
        hp_offset = auth_start
        if "@" in authority:
            userinfo, _, hostport = authority.rpartition("@")
            hp_offset += len(userinfo) + 1
        else:
            hostport = authority
        host, port, host_span, port_ok = _split_host_port(hostport, hp_offset)
        if host == "":
            degraded = True
        path_text, path_offset = base[auth_end:], auth_end
    elif base == "":
        path_text, path_offset = "", 0
    else:
        slash = base.find("/")
        head_end = slash if slash >= 0 else len(base)
        head = base[:head_end]
        if _HOSTLIKE_RE.match(head):
            host, port, host_span, port_ok = _split_host_port(head, 0)
            prefix_end = head_end
            path_text, path_offset = base[head_end:], head_end
        else:
            degraded = True
            path_text, path_offset = base, 0

    leading, segments, segment_spans = _split_path(path_text, path_offset)

    pairs: list[QueryPair] = []
    if has_query:
        pairs.extend(_query_pairs(query_text, query_offset))
    for segment, span in zip(segments, segment_spans):
        pairs.extend(_matrix_pairs(segment, span))

    parsed = ParsedUrl(
        raw=raw,
        scheme=scheme,
        host=host,
        port=port,
        userinfo=userinfo,
        host_span=host_span,
        path_segments=tuple(segments),
        path_segment_spans=tuple(segment_spans),
        path_leading_slash=leading,
        query_pairs=tuple(pairs),
        fragment=fragment,
        has_query=has_query,
        has_fragment=has_fragment,
        prefix_end=prefix_end,
        parsed_clean=False,
    )
    if (not degraded) and port_ok and parsed.reassemble() == raw:
        object.__setattr__(parsed, "parsed_clean", True)
    return parsed


def authority_prefix_end(raw: str) -> int:
    """Offset where the "scheme://host[:port]" prefix ends; 0 if absent."""
    m = _SCHEME_AUTHORITY_RE.match(raw)
    if not m:
        return 0
    i = m.end()
    while i < len(raw) and raw[i] not in "/?#":
        i += 1
    return i


def _decode_round(text: str, plus_as_space: bool) -> tuple[str, list[Span], bool]:
    """One decoding pass. Returns (decoded, per-char source spans, changed)."""
    out: list[str] = []
    spans: list[Span] = []
    changed = False
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "%" and i + 3 <= n and text[i + 1] in _HEX_DIGITS and text[i + 2] in _HEX_DIGITS:
            # Consume the whole escape run as bytes so multi-byte UTF-8
            # sequences decode to single characters.
            run = bytearray()
            byte_spans: list[Span] = []
            j = i
            while j + 3 <= n and text[j] == "%" and text[j + 1] in _HEX_DIGITS and text[j + 2] in _HEX_DIGITS:
                run.append(int(text[j + 1 : j + 3], 16))
                byte_spans.append((j, j + 3))
                j += 3
            decoder = codecs.getincrementaldecoder("utf-8")("replace")
            group_start = 0
            for bi, b in enumerate(run):
                chars = decoder.decode(bytes([b]))
                if chars:
                    span = (byte_spans[group_start][0], byte_spans[bi][1])
                    for ch in chars:
                        out.append(ch)
                        spans.append(span)
                    group_start = bi + 1
            tail = decoder.decode(b"", True)
            if tail:
                span = (byte_spans[group_start][0], byte_spans[-1][1])
                for ch in tail:
                    out.append(ch)
                    spans.append(span)
            changed = True
            i = j
        elif c == "+" and plus_as_space:
            out.append(" ")
            spans.append((i, i + 1))
            changed = True
            i += 1
        else:
            out.append(c)
            spans.append((i, i + 1))
            i += 1
    return "".join(out), spans, changed


def percent_decode_map(
    text: str, max_rounds: int = 2, plus_as_space: bool = False
) -> tuple[str, list[Span]]:
    """Decode %XX escapes for up to `max_rounds` passes with an offset map.

    Returns (decoded, spans) where spans[i] is the half-open span in `text`
    that produced decoded[i].  Invalid escapes pass through unchanged.  The
    '+'-to-space rule (form encoding) applies on the first pass only, so a
    literal '+' revealed by decoding "%2B" is not turned into a space.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    spans: list[Span] = [(k, k + 1) for k in range(len(text))]
    current = text
    for rnd in range(max_rounds):
        decoded, round_spans, changed = _decode_round(current, plus_as_space and rnd == 0)
        if not changed:
            break
        spans = [(spans[a][0], spans[b - 1][1]) for a, b in round_spans]
        current = decoded
    return current, spans


def percent_decode(text: str, max_rounds: int = 2, plus_as_space: bool = False) -> str:
    """Decode %XX escapes (and '+' in query context) for up to `max_rounds` passes."""
    return percent_decode_map(text, max_rounds, plus_as_space)[0]
