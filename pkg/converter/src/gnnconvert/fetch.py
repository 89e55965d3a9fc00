"""Optional source download: fetch distribution files from a base URL.

Only the formats whose sources are plain files are fetchable (the Planetoid
pieces and the coauthor ``.npz``); the arxiv archive must be downloaded and
extracted by hand.
"""

from __future__ import annotations

import urllib.parse
import urllib.request
from pathlib import Path

from .container import ConversionError
from .planetoid import PIECES

PLANETOID_FILES = tuple(f"ind.{{name}}.{piece}" for piece in PIECES) + (
    "ind.{name}.test.index",
)


def fetch_source(dataset: str, base_url: str, dest) -> Path:
    """Download the files ``dataset`` needs into ``dest``; returns the source
    path to pass to the parser (directory for planetoid, file for cs)."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    if dataset in ("cora", "citeseer", "pubmed"):
        names = [f.format(name=dataset) for f in PLANETOID_FILES]
        target = dest
    elif dataset == "cs":
        names = ["ms_academic_cs.npz"]
        target = dest / names[0]
    else:
        raise ConversionError(
            f"{dataset} cannot be fetched from a URL; download and extract "
            f"it manually, then pass --src"
        )
    if not base_url.endswith("/"):
        base_url += "/"
    for name in names:
        url = urllib.parse.urljoin(base_url, name)
        out = dest / name
        if out.exists():
            continue
        try:
            with urllib.request.urlopen(url) as resp:
                out.write_bytes(resp.read())
        except OSError as err:
            raise ConversionError(f"failed to fetch {url}: {err}") from None
    return target
