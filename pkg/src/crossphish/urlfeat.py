"""Lexical URL feature extraction over the 20-feature canonical schema.

All character counts run over the full raw URL string, scheme included.
Two features (url_google_index, qty_redirects) come from a resolver callable;
the default offline resolver yields missing values (NaN) that the data
pipeline later median-imputes.
"""

import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import EmptyUrl

CANONICAL_FEATURES = (
    "qty_dot_url",
    "qty_equal_url",
    "domain_length",
    "url_google_index",
    "qty_dollar_url",
    "qty_slash_url",
    "qty_redirects",
    "url_shortened",
    "tld_present_params",
    "qty_comma_url",
    "qty_hyphen_url",
    "qty_underline_url",
    "length_url",
    "qty_percent_url",
    "qty_asterisk_url",
    "qty_questionmark_url",
    "qty_tilde_url",
    "qty_at_url",
    "domain_in_ip",
    "qty_and_url",
)

# feature name -> counted character, for the plain count features
_COUNTED_CHAR = {
    "qty_dot_url": ".",
    "qty_equal_url": "=",
    "qty_dollar_url": "$",
    "qty_slash_url": "/",
    "qty_comma_url": ",",
    "qty_hyphen_url": "-",
    "qty_underline_url": "_",
    "qty_percent_url": "%",
    "qty_asterisk_url": "*",
    "qty_questionmark_url": "?",
    "qty_tilde_url": "~",
    "qty_at_url": "@",
    "qty_and_url": "&",
}

RESOLVER_FEATURES = ("url_google_index", "qty_redirects")
BINARY_FEATURES = ("url_google_index", "url_shortened", "tld_present_params", "domain_in_ip")

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*$")
_IPV4_RE = re.compile(r"^\d{1,3}(?:\.\d{1,3}){3}$")
_LABEL_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789-")
_TLD_TERMINATORS = frozenset("/&=?:")


@dataclass(frozen=True)
class ParsedUrl:
    """Best-effort decomposition of a raw URL.

    No percent-decoding or case folding happens here; fields are verbatim
    slices of the input.  `params` is the query string after the first '?'
    ('' when there is none), `port` is None when absent or malformed, and
    userinfo before the last '@' of the authority is dropped.
    """

    raw: str
    scheme: str
    domain: str
    port: int | None
    directory: str
    file: str
    params: str


def parse_url(url):
    """Split a URL into scheme/domain/port/directory/file/params.

    Args:
        url: raw URL string, scheme optional.

    Returns:
        ParsedUrl.

    Raises:
        EmptyUrl: if `url` is empty or whitespace.
    """
    if not isinstance(url, str) or not url.strip():
        raise EmptyUrl("url is empty")

    scheme = ""
    rest = url
    if "://" in url:
        head, tail = url.split("://", 1)
        # a '://' later in the string (e.g. inside the query) is not a scheme
        if _SCHEME_RE.match(head):
            scheme, rest = head, tail

    # authority runs to the first path or query delimiter
    cut = len(rest)
    for ch in "/?":
        pos = rest.find(ch)
        if pos != -1:
            cut = min(cut, pos)
    authority, pathq = rest[:cut], rest[cut:]

    if "@" in authority:
        authority = authority.rsplit("@", 1)[1]

    domain, port = _split_port(authority)

    if pathq.startswith("?"):
        path, params = "", pathq[1:]
    elif "?" in pathq:
        path, params = pathq.split("?", 1)
    else:
        path, params = pathq, ""

    if "/" in path:
        directory, fname = path.rsplit("/", 1)
    else:
        directory, fname = "", path

    return ParsedUrl(raw=url, scheme=scheme, domain=domain, port=port,
                     directory=directory, file=fname, params=params)


def _split_port(authority):
    if authority.startswith("["):
        close = authority.find("]")
        if close == -1:
            return authority, None
        host, after = authority[: close + 1], authority[close + 1 :]
        if after.startswith(":") and after[1:].isdigit():
            return host, int(after[1:])
        return host, None
    if ":" in authority:
        head, _, tail = authority.rpartition(":")
        if tail.isdigit():
            return head, int(tail)
        if tail == "":
            # bare trailing colon, empty port
            return head, None
    return authority, None


def reconstruct(parsed):
    """Rebuild a URL from parts; inverse of parse_url for URLs without
    userinfo, default-formatted ports, and a non-empty '?' query."""
    out = []
    if parsed.scheme:
        out.append(parsed.scheme + "://")
    out.append(parsed.domain)
    if parsed.port is not None:
        out.append(f":{parsed.port}")
    if parsed.directory or parsed.file:
        out.append(parsed.directory + "/" + parsed.file)
    if parsed.params:
        out.append("?" + parsed.params)
    return "".join(out)


def _data_text(name):
    return resources.files("crossphish").joinpath("data", name).read_text(encoding="utf-8")


def _load_kb(name):
    entries = []
    for line in _data_text(name).splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            entries.append(line)
    return tuple(entries)


def load_shorteners(path=None):
    """Shortener domain knowledge base, one domain per line, lowercase."""
    if path is None:
        return _load_kb("shorteners.txt")
    with open(path, encoding="utf-8") as fh:
        return tuple(s.strip().lower() for s in fh if s.strip() and not s.startswith("#"))


def load_tlds(path=None):
    """TLD knowledge base; every entry starts with a dot."""
    if path is None:
        entries = _load_kb("tlds.txt")
    else:
        with open(path, encoding="utf-8") as fh:
            entries = tuple(s.strip().lower() for s in fh if s.strip() and not s.startswith("#"))
    for e in entries:
        if not e.startswith("."):
            raise ValueError(f"tld entry must start with '.': {e!r}")
    return entries


def is_shortened(domain, shorteners):
    d = domain.lower()
    for s in shorteners:
        if d == s or d.endswith("." + s):
            return 1
    return 0


def domain_is_ip(domain):
    """1 for a dotted quad with octets 0..255 (leading zeros read as decimal)
    or a bracketed IPv6 literal, else 0."""
    if domain.startswith("[") and domain.endswith("]") and ":" in domain:
        return 1
    if _IPV4_RE.match(domain):
        return 1 if all(int(p) <= 255 for p in domain.split(".")) else 0
    return 0


def tld_in_params(params, tlds):
    """1 when some kb TLD occurs in the query at a token boundary.

    A match must be preceded by a hostname-label character ([a-z0-9-]) and
    followed by end of string or one of '/', '&', '=', '?', ':'.
    """
    if not params:
        return 0
    low = params.lower()
    n = len(low)
    for tld in tlds:
        start = 0
        while True:
            i = low.find(tld, start)
            if i == -1:
                break
            end = i + len(tld)
            if i > 0 and low[i - 1] in _LABEL_CHARS:
                if end == n or low[end] in _TLD_TERMINATORS:
                    return 1
            start = i + 1
    return 0


def null_resolver(url):
    """Offline resolver: both resolver-backed features are missing."""
    return (float("nan"), float("nan"))


@dataclass
class FeatureVector:
    url: str
    values: np.ndarray
    names: tuple = field(default=CANONICAL_FEATURES)

    def as_dict(self):
        return dict(zip(self.names, self.values.tolist()))

    def validate(self):
        """Check the schema invariant: counts and lengths are non-negative
        integers, binary features are in {0, 1}, and only resolver-backed
        features may be missing."""
        for name, v in zip(self.names, self.values):
            if np.isnan(v):
                if name not in RESOLVER_FEATURES:
                    raise ValueError(f"{name} may not be missing")
                continue
            if v < 0 or v != int(v):
                raise ValueError(f"{name} must be a non-negative integer, got {v}")
            if name in BINARY_FEATURES and v not in (0.0, 1.0):
                raise ValueError(f"{name} must be 0 or 1, got {v}")
        return self


def extract_features(url, resolver=null_resolver, shorteners=None, tlds=None):
    """Extract the 20 canonical features for one URL.

    Args:
        url: raw URL string.
        resolver: callable url -> (google_index, redirect_count); entries may
            be NaN for unresolved.  Defaults to the offline null resolver.
        shorteners: shortener kb override (sequence of lowercase domains).
        tlds: TLD kb override (sequence of '.x' strings).

    Returns:
        FeatureVector with values ordered like CANONICAL_FEATURES.
    """
    parsed = parse_url(url)
    if shorteners is None:
        shorteners = load_shorteners()
    if tlds is None:
        tlds = load_tlds()

    google_index, redirects = resolver(url)

    out = np.empty(len(CANONICAL_FEATURES), dtype=np.float64)
    for k, name in enumerate(CANONICAL_FEATURES):
        if name in _COUNTED_CHAR:
            out[k] = url.count(_COUNTED_CHAR[name])
        elif name == "domain_length":
            out[k] = len(parsed.domain)
        elif name == "length_url":
            out[k] = len(url)
        elif name == "url_google_index":
            out[k] = google_index
        elif name == "qty_redirects":
            out[k] = redirects
        elif name == "url_shortened":
            out[k] = is_shortened(parsed.domain, shorteners)
        elif name == "tld_present_params":
            out[k] = tld_in_params(parsed.params, tlds)
        else:
            out[k] = domain_is_ip(parsed.domain)
    return FeatureVector(url=url, values=out)


def extract_all(urls, resolver=null_resolver, shorteners=None, tlds=None):
    """Extract features for many URLs.

    Returns:
        (matrix, names): float64 array of shape (n, 20) and the canonical
        feature name tuple.
    """
    if shorteners is None:
        shorteners = load_shorteners()
    if tlds is None:
        tlds = load_tlds()
    mat = np.empty((len(urls), len(CANONICAL_FEATURES)), dtype=np.float64)
    for i, url in enumerate(urls):
        try:
            mat[i] = extract_features(url, resolver, shorteners, tlds).values
        except EmptyUrl:
            raise EmptyUrl(f"row {i}: url is empty")
    return mat, CANONICAL_FEATURES
