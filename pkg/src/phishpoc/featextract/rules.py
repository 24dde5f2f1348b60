"""Discretisation rules turning raw website facts into {-1, 0, 1}.

-1 points to a legitimate site, 0 is suspicious (also used for unknown
facts), 1 points to phishing. Every numeric threshold lives in this module.
"""

from __future__ import annotations

from importlib import resources

LEGIT, SUSPICIOUS, PHISHY = -1, 0, 1

# (upper bound exclusive for -1, upper bound inclusive for 0); above -> 1
URL_LENGTH = (54, 75)
# dots left in the host after dropping a leading "www." and a two-letter ccTLD
MAX_BENIGN_DOTS = 3
# share of anchors pointing off-site or nowhere, in percent
ANCHOR_RATIO = (31, 67)
# share of embedded objects / meta+script+link resources loaded off-site, in percent
RESOURCE_RATIO = (22, 61)
MIN_DOMAIN_AGE_DAYS = 180
MIN_PAGE_RANK = 0.2
# redirect hops: <= 1 legit, 2-3 suspicious, >= 4 phishing
REDIRECTS = (1, 3)
SSL_STATES = {"Trusted": LEGIT, "Untrusted": SUSPICIOUS, "None": PHISHY}

URL_FEATURES = (
    "ip_address", "at_symbol", "dash_symbol", "dots_number", "fake_https",
    "url_length", "redirect", "shortener", "data_uri",
)
REP_FEATURES = (
    "ssl_final_state", "url_dns_mismatch", "dns_record", "domain_age",
    "page_rank", "port_status", "redirections",
)
HTML_FEATURES = (
    "sfh", "anchors", "favicon", "iframe", "mail_form", "pop_up",
    "right_click", "objects", "status_bar", "meta_scripts", "css",
)


def three_way(value: float, bounds: tuple[float, float], strict_low: bool = True) -> int:
    """-1 below the first bound, 0 up to the second, 1 above it."""
    lo, hi = bounds
    if value < lo if strict_low else value <= lo:
        return LEGIT
    return SUSPICIOUS if value <= hi else PHISHY


def flag(condition: bool | None) -> int:
    """Boolean phishing indicator; None (unknown) maps to suspicious."""
    if condition is None:
        return SUSPICIOUS
    return PHISHY if condition else LEGIT


def load_shorteners(text: str | None = None) -> tuple[frozenset[str], str]:
    """Domains of the bundled shortener list and the list version it declares."""
    if text is None:
        text = resources.files("phishpoc.featextract").joinpath("shorteners.txt").read_text(encoding="utf-8")
    version = "unversioned"
    domains = set()
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            if "list-version:" in line:
                version = line.split("list-version:", 1)[1].strip()
            continue
        if line:
            domains.add(line.lower())
    return frozenset(domains), version


SHORTENERS, SHORTENER_LIST_VERSION = load_shorteners()
