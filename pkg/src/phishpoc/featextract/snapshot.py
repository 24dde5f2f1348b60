"""Offline site snapshots: the archive format, a best-effort fetcher and corpus building."""

from __future__ import annotations

import json
import os
import random
import socket
import ssl
import struct
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..dataset import Dataset, canonical_schema
from ..errors import ConfigError
from .extractors import extract_features, parse_url

RESOLVER_ENV = "POC_RESOLVER"
DEFAULT_TIMEOUT = 10.0
DEFAULT_IN_FLIGHT = 8
_STANDARD_PORTS = {80, 443}


@dataclass(frozen=True)
class SiteSnapshot:
    """Raw facts about one site; None marks a fact that is unknown."""

    url: str
    html: str | None = None
    dns_record_present: bool | None = None
    domain_age_days: int | None = None
    ssl_state: str | None = None
    page_rank: float | None = None
    open_nonstandard_ports: bool | None = None
    redirect_count: int | None = None
    url_dns_mismatch: bool | None = None

    def __post_init__(self):
        parse_url(self.url)
        if self.ssl_state not in (None, "Trusted", "Untrusted", "None"):
            raise ValueError(f"ssl_state must be Trusted, Untrusted or None, got {self.ssl_state!r}")

    def features(self) -> np.ndarray:
        return extract_features(self)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)


def snapshot_from_dict(doc: dict, base_dir: str | Path | None = None) -> SiteSnapshot:
    doc = dict(doc)
    html_path = doc.pop("html_path", None)
    if html_path is not None and doc.get("html") is None:
        path = Path(base_dir or ".") / html_path
        doc["html"] = path.read_text(encoding="utf-8", errors="replace")
    known = {f.name for f in fields(SiteSnapshot)}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown snapshot fields {sorted(extra)}")
    return SiteSnapshot(**doc)


def load_snapshot(path: str | Path) -> SiteSnapshot:
    path = Path(path)
    return snapshot_from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


def save_snapshot(snap: SiteSnapshot, path: str | Path) -> None:
    Path(path).write_text(snap.to_json() + "\n", encoding="utf-8")


def load_snapshot_dir(directory: str | Path) -> dict[str, SiteSnapshot]:
    """Every ``*.json`` snapshot in a directory, keyed by URL."""
    out = {}
    for path in sorted(Path(directory).glob("*.json")):
        snap = load_snapshot(path)
        out[snap.url] = snap
    return out


class SystemResolver:
    """DNS presence via the operating system's resolver."""

    def __init__(self, timeout: float = DEFAULT_TIMEOUT):
        self.timeout = timeout

    def has_record(self, host: str) -> bool | None:
        try:
            socket.getaddrinfo(host, None)
            return True
        except socket.gaierror as exc:
            if exc.errno in (socket.EAI_NONAME, getattr(socket, "EAI_NODATA", -5)):
                return False
            return None
        except OSError:
            return None


class UdpResolver:
    """Minimal A-record lookup against one DNS server over UDP."""

    def __init__(self, server: str, port: int = 53, timeout: float = DEFAULT_TIMEOUT):
        self.server = server
        self.port = port
        self.timeout = timeout

    @classmethod
    def from_env(cls, timeout: float = DEFAULT_TIMEOUT):
        spec = os.environ.get(RESOLVER_ENV)
        if not spec:
            return SystemResolver(timeout)
        host, _, port = spec.partition(":")
        return cls(host, int(port or 53), timeout)

    def query(self, host: str) -> bytes:
        qid = random.getrandbits(16)
        header = struct.pack(">HHHHHH", qid, 0x0100, 1, 0, 0, 0)
        qname = b"".join(bytes([len(p)]) + p.encode("idna") for p in host.rstrip(".").split(".")) + b"\0"
        with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as s:
            s.settimeout(self.timeout)
            s.sendto(header + qname + struct.pack(">HH", 1, 1), (self.server, self.port))
            return s.recv(4096)

    def has_record(self, host: str) -> bool | None:
        try:
            reply = self.query(host)
        except (OSError, UnicodeError):
            return None
        if len(reply) < 12:
            return None
        flags, _, answers = struct.unpack(">HHH", reply[2:8])
        rcode = flags & 0xF
        if rcode == 3:  # NXDOMAIN
            return False
        if rcode != 0:
            return None
        return answers > 0


class _CountingRedirects(urllib.request.HTTPRedirectHandler):
    def __init__(self):
        self.count = 0

    def redirect_request(self, req, fp, code, msg, headers, newurl):
        self.count += 1
        return super().redirect_request(req, fp, code, msg, headers, newurl)


def fetch_snapshot(url: str, resolver=None, timeout: float = DEFAULT_TIMEOUT) -> SiteSnapshot:
    """Collect what can be observed about ``url`` right now.

    Network failures leave the corresponding facts unknown; only a malformed
    URL raises (InvalidUrl). Domain age and page rank are never fetched live.
    """
    p = parse_url(url)
    target = p.raw if "://" in p.raw else "http://" + p.raw
    resolver = resolver if resolver is not None else UdpResolver.from_env(timeout)

    dns = None if p.is_ip or not p.host else resolver.has_record(p.host)
    ports = True if p.port is not None and p.port not in _STANDARD_PORTS else None

    html = ssl_state = redirects = None
    counter = _CountingRedirects()
    opener = urllib.request.build_opener(counter)
    try:
        with opener.open(target, timeout=timeout) as resp:
            body = resp.read()
            charset = resp.headers.get_content_charset() or "utf-8"
            html = body.decode(charset, errors="replace")
            redirects = counter.count
            ssl_state = "Trusted" if resp.geturl().lower().startswith("https://") else "None"
    except urllib.error.URLError as exc:
        if isinstance(getattr(exc, "reason", None), ssl.SSLError):
            ssl_state = "Untrusted"
    except (OSError, ValueError, ssl.SSLError):
        pass
    return SiteSnapshot(
        url=url,
        html=html,
        dns_record_present=dns,
        ssl_state=ssl_state,
        open_nonstandard_ports=ports,
        redirect_count=redirects,
    )


def fetch_many(urls: Sequence[str], resolver=None, timeout: float = DEFAULT_TIMEOUT,
               max_in_flight: int = DEFAULT_IN_FLIGHT) -> list[SiteSnapshot]:
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(lambda u: fetch_snapshot(u, resolver, timeout), urls))


def read_url_list(path: str | Path) -> list[tuple[str, int]]:
    """Lines of ``url,label``; blank lines and ``#`` comments are skipped."""
    out = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        url, sep, label = line.rpartition(",")
        key = label.strip().lower()
        if not sep or key not in ("0", "1", "benign", "phishing"):
            raise ConfigError(f"line {n + 1}: expected 'url,label', got {line!r}")
        out.append((url.strip(), 1 if key in ("1", "phishing") else 0))
    return out


def build_dataset(
    entries: Iterable[tuple[str, int]],
    snapshots: dict[str, SiteSnapshot] | None = None,
    name: str = "extracted",
) -> Dataset:
    """Canonical-schema dataset from labeled URLs; URLs without a snapshot get URL facts only."""
    snapshots = snapshots or {}
    rows, labels = [], []
    for url, label in entries:
        snap = snapshots.get(url) or SiteSnapshot(url)
        rows.append(extract_features(snap))
        labels.append(label)
    schema = canonical_schema()
    X = np.array(rows).reshape(len(rows), len(schema))
    return Dataset(schema, X, labels, name=name)
