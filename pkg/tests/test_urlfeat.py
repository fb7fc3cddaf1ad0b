import math
import random

import numpy as np
import pytest

from crossphish import urlfeat
from crossphish.errors import EmptyUrl
from crossphish.urlfeat import (
    CANONICAL_FEATURES,
    extract_all,
    extract_features,
    null_resolver,
    parse_url,
    reconstruct,
)


def test_canonical_schema_has_twenty_features():
    assert len(CANONICAL_FEATURES) == 20
    assert len(set(CANONICAL_FEATURES)) == 20


def test_golden_corpus_exact(golden_rows, golden_resolver):
    """Every hand-tabulated value matches, integer-exactly."""
    assert len(golden_rows) >= 50
    for row in golden_rows:
        fv = extract_features(row["url"], resolver=golden_resolver)
        fv.validate()
        got = fv.as_dict()
        for name in CANONICAL_FEATURES:
            assert got[name] == int(row[name]), (row["url"], name, got[name], row[name])


def test_extract_all_matches_single(golden_rows, golden_resolver):
    urls = [r["url"] for r in golden_rows]
    mat, names = extract_all(urls, resolver=golden_resolver)
    assert names == CANONICAL_FEATURES
    assert mat.shape == (len(urls), 20)
    for i, url in enumerate(urls):
        np.testing.assert_array_equal(mat[i], extract_features(url, resolver=golden_resolver).values)


def test_parse_url_worked_examples():
    p = parse_url("http://a.com/d/f.php?x=1")
    assert (p.scheme, p.domain, p.port) == ("http", "a.com", None)
    assert (p.directory, p.file, p.params) == ("/d", "f.php", "x=1")

    p = parse_url("http://u@site.com:8080/p")
    assert (p.domain, p.port, p.directory, p.file) == ("site.com", 8080, "", "p")


def test_parse_url_details():
    p = parse_url("https://www.example.com/")
    assert (p.directory, p.file, p.params) == ("", "", "")

    p = parse_url("http://a.com?next=http://b.org")
    assert p.domain == "a.com"
    assert p.params == "next=http://b.org"

    p = parse_url("http://paypal.com@evil.net/x")
    assert p.domain == "evil.net"

    p = parse_url("http://[::1]:8080/y")
    assert (p.domain, p.port) == ("[::1]", 8080)

    p = parse_url("example.com/path")
    assert (p.scheme, p.domain, p.file) == ("", "example.com", "path")


def test_parse_url_empty_raises():
    with pytest.raises(EmptyUrl):
        parse_url("")
    with pytest.raises(EmptyUrl):
        parse_url("   ")
    with pytest.raises(EmptyUrl):
        extract_features("")


def test_extract_all_reports_row_of_empty_url():
    with pytest.raises(EmptyUrl, match="row 1"):
        extract_all(["http://a.com", ""])


def test_null_resolver_gives_missing():
    fv = extract_features("http://a.com/p", resolver=null_resolver)
    d = fv.as_dict()
    assert math.isnan(d["url_google_index"])
    assert math.isnan(d["qty_redirects"])
    fv.validate()


def test_validate_rejects_bad_values():
    fv = extract_features("http://a.com/p")
    fv.values[0] = -1.0
    with pytest.raises(ValueError):
        fv.validate()
    fv = extract_features("http://a.com/p")
    fv.values[CANONICAL_FEATURES.index("domain_in_ip")] = 2.0
    with pytest.raises(ValueError):
        fv.validate()
    # missing only allowed for resolver-backed features
    fv = extract_features("http://a.com/p")
    fv.values[0] = float("nan")
    with pytest.raises(ValueError):
        fv.validate()


def test_roundtrip_on_generated_urls():
    """parse/reconstruct round-trips for URLs without userinfo or odd ports."""
    rng = random.Random(20240817)
    schemes = ["http", "https", ""]
    hosts = ["a.com", "sub.domain.org", "1.2.3.4", "[::1]", "x-y.co.uk"]
    for _ in range(300):
        scheme = rng.choice(schemes)
        host = rng.choice(hosts)
        port = rng.choice([None, 80, 8080, 65535])
        ndir = rng.randrange(0, 3)
        segs = ["seg%d" % rng.randrange(10) for _ in range(ndir)]
        fname = rng.choice(["", "f.php", "index.html", "x"])
        query = rng.choice(["", "a=1", "a=1&b=2", "u=x.com"])
        url = ""
        if scheme:
            url += scheme + "://"
        url += host
        if port is not None:
            url += f":{port}"
        path = ""
        if segs or fname:
            path = "/" + "/".join(segs + [fname]) if segs else "/" + fname
        url += path
        if query:
            url += "?" + query
        p = parse_url(url)
        assert reconstruct(p) == url, url
        assert p.domain == host
        assert p.port == port


def test_tld_boundary_rules():
    tlds = (".com", ".org")
    cases = {
        "u=site.com": 1,
        "u=site.com/page": 1,
        "u=site.com&v=2": 1,
        "u=site.com=1": 1,
        "u=site.com?x": 1,
        "u=site.com:80": 1,
        "u=site.comx": 0,
        "u=.com": 0,
        "u=a..com": 0,
        "u=a.com#f": 0,
        "": 0,
        "plain": 0,
    }
    for params, want in cases.items():
        assert urlfeat.tld_in_params(params, tlds) == want, params


def test_shortener_suffix_rule():
    kb = ("bit.ly", "t.co")
    assert urlfeat.is_shortened("bit.ly", kb) == 1
    assert urlfeat.is_shortened("www.bit.ly", kb) == 1
    assert urlfeat.is_shortened("notbit.ly", kb) == 0
    assert urlfeat.is_shortened("BIT.LY", kb) == 1
    assert urlfeat.is_shortened("t.company.com", kb) == 0


def test_ip_rules():
    assert urlfeat.domain_is_ip("192.168.2.1") == 1
    assert urlfeat.domain_is_ip("255.255.255.255") == 1
    assert urlfeat.domain_is_ip("256.1.1.1") == 0
    assert urlfeat.domain_is_ip("1.2.3") == 0
    assert urlfeat.domain_is_ip("1.2.3.4.5") == 0
    assert urlfeat.domain_is_ip("[2001:db8::1]") == 1
    assert urlfeat.domain_is_ip("example.com") == 0


def test_kb_loaders():
    s = urlfeat.load_shorteners()
    t = urlfeat.load_tlds()
    assert "bit.ly" in s
    assert all(e.startswith(".") for e in t)
