"""Feature extraction from URLs, HTML and reputation snapshots into the canonical schema."""

from .extractors import (
    extract_features,
    extract_html_features,
    extract_rep_features,
    extract_url_features,
    parse_url,
    registered_domain,
)
from .rules import SHORTENER_LIST_VERSION, SHORTENERS
from .snapshot import (
    SiteSnapshot,
    SystemResolver,
    UdpResolver,
    build_dataset,
    fetch_many,
    fetch_snapshot,
    load_snapshot,
    load_snapshot_dir,
    read_url_list,
    save_snapshot,
    snapshot_from_dict,
)

__all__ = [
    "SHORTENERS",
    "SHORTENER_LIST_VERSION",
    "SiteSnapshot",
    "SystemResolver",
    "UdpResolver",
    "build_dataset",
    "extract_features",
    "extract_html_features",
    "extract_rep_features",
    "extract_url_features",
    "fetch_many",
    "fetch_snapshot",
    "load_snapshot",
    "load_snapshot_dir",
    "parse_url",
    "read_url_list",
    "registered_domain",
    "save_snapshot",
    "snapshot_from_dict",
]
