"""Disk cache for client outputs.

Keys are (model id, content hashes); values are small npz records.  Writes
go through a temp file and an atomic rename, so concurrent writers of the
same key simply race to an identical result (last write wins).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np


class DiskCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, kind: str, *key_parts: str) -> Path:
        digest = hashlib.sha256("|".join(key_parts).encode()).hexdigest()[:24]
        d = self.root / kind
        d.mkdir(parents=True, exist_ok=True)
        return d / f"{digest}.npz"

    def entry_path(self, kind: str, *key_parts: str) -> Path:
        """Stable on-disk location for a key (for callers with their own format)."""
        return self._path(kind, *key_parts)

    def get(self, kind: str, *key_parts: str) -> dict | None:
        path = self._path(kind, *key_parts)
        if not path.exists():
            return None
        try:
            with np.load(path, allow_pickle=False) as z:
                out = {k: z[k] for k in z.files}
        except (OSError, ValueError):
            return None  # partial/corrupt entry: treat as a miss
        if "__json__" in out:
            out["__json__"] = json.loads(bytes(out["__json__"]).decode())
        return out

    def put(self, kind: str, *key_parts: str, arrays: dict | None = None, meta: dict | None = None) -> None:
        payload = dict(arrays or {})
        if meta is not None:
            payload["__json__"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
        path = self._path(kind, *key_parts)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                np.savez(f, **payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
