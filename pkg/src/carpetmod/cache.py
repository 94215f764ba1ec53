"""Content-addressed store for solver reports.

An entry is the exact byte string of a serialized report, filed under the
SHA-256 of a canonical JSON key.  Metadata (creation time) lives in a sibling
file so that a hit returns the original bytes unchanged.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

from filelock import FileLock

from . import __version__

ENV_VAR = "CML_CACHE"
DEFAULT_DIR = ".cml-cache"


def canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def cache_key(payload: dict) -> str:
    return hashlib.sha256(canonical({**payload, "code_version": __version__})).hexdigest()


class ResultCache:
    def __init__(self, root: str | os.PathLike | None = None):
        self.root = Path(root if root is not None else os.environ.get(ENV_VAR, DEFAULT_DIR))

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> bytes | None:
        p = self._path(key)
        try:
            return p.read_bytes()
        except FileNotFoundError:
            return None

    def put(self, key: str, data: bytes) -> bytes:
        """Store ``data`` unless an entry exists; return the stored bytes."""
        p = self._path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        with FileLock(str(p) + ".lock"):
            if p.exists():
                return p.read_bytes()
            fd, tmp = tempfile.mkstemp(dir=p.parent, suffix=".tmp")
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, p)
            meta = {"key": key, "created": time.time(), "bytes": len(data)}
            p.with_suffix(".meta").write_text(json.dumps(meta))
        return data

    def __contains__(self, key: str) -> bool:
        return self._path(key).exists()
