"""Active SSH fingerprinting with a historical lookup store.

Thin convenience layer over the C++ core: scan results and lookups surface
as plain dicts decoded from the core's canonical JSON.
"""

import json as _json
from typing import Optional

from ._core import (
    PsshError,
    client_identification,
    fingerprint_blob,
    hassh_server,
    parse_identification,
)
from . import _core

__all__ = [
    "PsshError",
    "Store",
    "client_identification",
    "fingerprint_blob",
    "hassh_server",
    "parse_identification",
    "scan",
]


def scan(host: str, port: int = 22, timeout: float = 10.0, retries: int = 1,
         socks: Optional[str] = None) -> dict:
    """Fingerprint one SSH endpoint and return the observation record."""
    return _json.loads(_core.scan_json(host, port, timeout, retries, socks or ""))


class Store:
    """Historical observation store (in-memory unless a path is given)."""

    def __init__(self, path: Optional[str] = None):
        self._core = _core.Datastore(path or "")

    def ingest(self, record: dict) -> dict:
        new_host, new_keys, new_banner = self._core.ingest_json(_json.dumps(record))
        return {"new_host": new_host, "new_keys": new_keys, "new_banner": new_banner}

    def host(self, host: str, port: Optional[int] = None) -> list:
        return _json.loads(self._core.host_json(host, port))

    def key(self, md5_hex: str) -> dict:
        return _json.loads(self._core.key_json(md5_hex))

    def hassh(self, digest: str) -> list:
        return _json.loads(self._core.hassh_json(digest))

    def banner(self, banner: str) -> list:
        return _json.loads(self._core.banner_json(banner))

    def banners(self) -> list:
        return self._core.banners()

    def stats(self) -> dict:
        return _json.loads(self._core.stats_json())

    def onion_correlation(self) -> list:
        return _json.loads(self._core.onions_json())

    def export_jsonl(self, path: str) -> int:
        return self._core.export_jsonl(path)

    def import_jsonl(self, path: str) -> dict:
        imported, skipped, warnings = self._core.import_jsonl(path)
        return {"imported": imported, "skipped": skipped, "warnings": list(warnings)}
