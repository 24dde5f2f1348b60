"""Pure feature extractors over a URL, an HTML document and a reputation snapshot."""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from urllib.parse import urljoin, urlsplit

import numpy as np

from ..errors import InvalidUrl
from . import rules
from .rules import LEGIT, PHISHY, SUSPICIOUS, flag, three_way

_HOST_RE = re.compile(r"^[a-z0-9_](?:[a-z0-9_-]*[a-z0-9_])?(?:\.[a-z0-9_](?:[a-z0-9_-]*[a-z0-9_])?)*\.?$")
_GENERIC_SLD = {"co", "com", "ac", "org", "net", "gov", "edu"}


@dataclass(frozen=True)
class ParsedUrl:
    raw: str
    scheme: str
    host: str
    port: int | None
    is_ip: bool


def parse_url(url: str) -> ParsedUrl:
    """Split a URL, adding ``http://`` when no scheme is given.

    Raises InvalidUrl (an UnparsableUrl) for text that cannot be a web address.
    """
    if not isinstance(url, str) or not url.strip() or any(c.isspace() for c in url.strip()):
        raise InvalidUrl(f"not a URL: {url!r}")
    raw = url.strip()
    if raw.lower().startswith("data:"):
        return ParsedUrl(raw, "data", "", None, False)
    text = raw if "://" in raw else "http://" + raw
    try:
        parts = urlsplit(text)
        port = parts.port
    except ValueError as exc:
        raise InvalidUrl(f"not a URL: {url!r} ({exc})") from None
    host = (parts.hostname or "").lower()
    if not host:
        raise InvalidUrl(f"URL has no host: {url!r}")
    is_ip = _is_ip(host)
    if not is_ip and not _HOST_RE.match(host):
        raise InvalidUrl(f"malformed host {host!r} in {url!r}")
    if not is_ip and "." not in host and host != "localhost":
        raise InvalidUrl(f"host {host!r} is not a domain name")
    return ParsedUrl(raw, parts.scheme.lower(), host, port, is_ip)


def _is_ip(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
        return True
    except ValueError:
        pass
    # hexadecimal / integer encodings such as 0x7f.0x0.0x0.0x1
    labels = host.split(".")
    return all(re.fullmatch(r"0x[0-9a-f]+|\d+", lab) for lab in labels) and len(labels) <= 4


def registered_domain(host: str) -> str:
    """Approximate registrable domain: last two labels, or three under ``co.uk``-style suffixes."""
    labels = host.lower().rstrip(".").split(".")
    if _is_ip(host) or len(labels) <= 2:
        return host.lower()
    if len(labels[-1]) == 2 and labels[-2] in _GENERIC_SLD:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])


def _strip_host(host: str) -> str:
    if host.startswith("www."):
        host = host[4:]
    labels = host.split(".")
    if len(labels) > 1 and len(labels[-1]) == 2 and labels[-1].isalpha():
        labels = labels[:-1]
    return ".".join(labels)


def extract_url_features(url: str) -> np.ndarray:
    """The nine URL-lexical features, in schema order."""
    p = parse_url(url)
    raw = p.raw
    host = p.host
    after_scheme = raw.find("://") + 3 if "://" in raw else 0
    values = {
        "ip_address": flag(p.is_ip),
        "at_symbol": flag("@" in raw),
        "dash_symbol": flag("-" in host),
        "dots_number": flag(_strip_host(host).count(".") > rules.MAX_BENIGN_DOTS) if host else LEGIT,
        "fake_https": flag("https" in host),
        "url_length": three_way(len(raw), rules.URL_LENGTH),
        # a second '//' beyond the scheme separator signals an embedded redirect
        "redirect": flag("//" in raw[after_scheme:]),
        "shortener": flag(registered_domain(host) in rules.SHORTENERS or host in rules.SHORTENERS),
        "data_uri": flag(p.scheme == "data" or "data:" in raw.lower()),
    }
    return np.array([values[n] for n in rules.URL_FEATURES], dtype=float)


class _PageParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.tags: list[tuple[str, dict[str, str]]] = []
        self.script_text: list[str] = []
        self._in_script = False

    def handle_starttag(self, tag, attrs):
        a = {k.lower(): (v or "") for k, v in attrs}
        self.tags.append((tag.lower(), a))
        self._in_script = tag.lower() == "script"

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        self._in_script = False

    def handle_endtag(self, tag):
        if tag.lower() == "script":
            self._in_script = False

    def handle_data(self, data):
        if self._in_script:
            self.script_text.append(data)


def _is_external(link: str, base_url: str, site: str) -> bool:
    target = urlsplit(urljoin(base_url, link.strip()))
    host = (target.hostname or "").lower()
    if not host:
        return False
    return registered_domain(host) != site


def _is_null_link(link: str) -> bool:
    s = link.strip().lower()
    return s in ("", "#", "#content", "#skip") or s.startswith("javascript:")


def _percent(num: int, den: int) -> float:
    return 100.0 * num / den if den else 0.0


def extract_html_features(html: str | None, base_url: str) -> np.ndarray:
    """The eleven HTML features, in schema order.

    An empty or missing document yields all zeros.
    """
    if html is None or not html.strip():
        return np.zeros(len(rules.HTML_FEATURES))
    try:
        site = registered_domain(parse_url(base_url).host)
    except InvalidUrl:
        site = ""
    base = base_url if "://" in base_url else "http://" + base_url
    parser = _PageParser()
    try:
        parser.feed(html)
        parser.close()
    except Exception:
        return np.zeros(len(rules.HTML_FEATURES))
    if not parser.tags:
        return np.zeros(len(rules.HTML_FEATURES))
    tags = parser.tags
    scripts = "\n".join(parser.script_text).lower()
    inline = " ".join(v.lower() for _, a in tags for k, v in a.items() if k.startswith("on"))
    code = scripts + "\n" + inline

    def ext(link):
        return _is_external(link, base, site)

    forms = [a.get("action", "") for t, a in tags if t == "form"]
    if any(f.strip().lower() in ("", "about:blank") for f in forms):
        sfh = PHISHY
    elif any(ext(f) for f in forms if not f.lower().startswith("mailto:")):
        sfh = SUSPICIOUS
    else:
        sfh = LEGIT

    anchors = [a.get("href", "") for t, a in tags if t == "a"]
    bad = sum(1 for h in anchors if _is_null_link(h) or ext(h))
    anchor_v = three_way(_percent(bad, len(anchors)), rules.ANCHOR_RATIO)

    icons = [a.get("href", "") for t, a in tags if t == "link" and "icon" in a.get("rel", "").lower()]
    favicon = flag(any(ext(h) for h in icons if h))

    objects = [a.get("src", "") for t, a in tags if t in ("img", "video", "audio", "embed", "source", "object")]
    objects += [a.get("data", "") for t, a in tags if t == "object" and a.get("data")]
    objects = [s for s in objects if s]
    objects_v = three_way(_percent(sum(map(ext, objects)), len(objects)), rules.RESOURCE_RATIO)

    res = [a.get("src", "") for t, a in tags if t == "script" and a.get("src")]
    res += [a.get("href", "") for t, a in tags if t == "link" and a.get("href")]
    res += [a.get("content", "") for t, a in tags if t == "meta" and "://" in a.get("content", "")]
    meta_v = three_way(_percent(sum(map(ext, res)), len(res)), rules.RESOURCE_RATIO)

    sheets = [a.get("href", "") for t, a in tags if t == "link" and "stylesheet" in a.get("rel", "").lower()]
    values = {
        "sfh": sfh,
        "anchors": anchor_v,
        "favicon": favicon,
        "iframe": flag(any(t in ("iframe", "frame") for t, _ in tags)),
        "mail_form": flag(any(f.strip().lower().startswith("mailto:") for f in forms) or "mail(" in scripts),
        "pop_up": flag("window.open(" in code),
        "right_click": flag(
            re.search(r"event\.button\s*==+\s*2", code) is not None
            or any("return false" in a.get("oncontextmenu", "").lower() for _, a in tags)
        ),
        "objects": objects_v,
        "status_bar": flag("window.status" in code),
        "meta_scripts": meta_v,
        "css": flag(any(ext(h) for h in sheets if h)),
    }
    return np.array([values[n] for n in rules.HTML_FEATURES], dtype=float)


def extract_rep_features(snap) -> np.ndarray:
    """The seven reputation features from a SiteSnapshot; unknown facts map to 0."""
    ssl = rules.SSL_STATES.get(snap.ssl_state, SUSPICIOUS) if snap.ssl_state is not None else SUSPICIOUS
    age = None if snap.domain_age_days is None else snap.domain_age_days < rules.MIN_DOMAIN_AGE_DAYS
    rank = None if snap.page_rank is None else snap.page_rank < rules.MIN_PAGE_RANK
    dns = None if snap.dns_record_present is None else not snap.dns_record_present
    redirects = SUSPICIOUS if snap.redirect_count is None else three_way(
        snap.redirect_count, rules.REDIRECTS, strict_low=False
    )
    values = {
        "ssl_final_state": ssl,
        "url_dns_mismatch": flag(snap.url_dns_mismatch),
        "dns_record": flag(dns),
        "domain_age": flag(age),
        "page_rank": flag(rank),
        "port_status": flag(snap.open_nonstandard_ports),
        "redirections": redirects,
    }
    return np.array([values[n] for n in rules.REP_FEATURES], dtype=float)


def extract_features(snap) -> np.ndarray:
    """All 27 features in canonical order: URL, then REP, then HTML."""
    return np.concatenate([
        extract_url_features(snap.url),
        extract_rep_features(snap),
        extract_html_features(snap.html, snap.url),
    ])
