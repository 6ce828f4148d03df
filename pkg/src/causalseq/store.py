"""File-backed persistence for datasets and analyses.

Ids derive from content hashes, so re-ingesting the same bytes in a fresh
store yields the same id; duplicates within one store get a numeric suffix
instead of being deduplicated. Writes go through a temp file and rename, so
readers never observe a partially-written record.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

__all__ = ["Store", "content_id"]

DATA_DIR_ENV = "CAUSALSEQ_DATA"


def content_id(payload: bytes, prefix: str) -> str:
    import hashlib

    return f"{prefix}-{hashlib.sha256(payload).hexdigest()[:12]}"


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Store:
    """JSON documents under <root>/datasets and <root>/analyses."""

    def __init__(self, root: str | Path | None = None):
        if root is None:
            root = os.environ.get(DATA_DIR_ENV, "./causalseq-data")
        self.root = Path(root)
        for sub in ("datasets", "analyses"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    def _path(self, kind: str, item_id: str) -> Path:
        name = f"{item_id}.json"
        if name != Path(name).name:
            raise ValueError(f"invalid id {item_id!r}")
        return self.root / kind / name

    def _fresh_id(self, kind: str, base: str) -> str:
        if not self._path(kind, base).exists():
            return base
        n = 2
        while self._path(kind, f"{base}-{n}").exists():
            n += 1
        return f"{base}-{n}"

    def put_new(self, kind: str, base_id: str, doc: dict) -> str:
        item_id = self._fresh_id(kind, base_id)
        self.put(kind, item_id, doc)
        return item_id

    def put(self, kind: str, item_id: str, doc: dict) -> None:
        data = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        _atomic_write(self._path(kind, item_id), data)

    def get(self, kind: str, item_id: str) -> dict | None:
        path = self._path(kind, item_id)
        try:
            return json.loads(path.read_text())
        except FileNotFoundError:
            return None

    def delete(self, kind: str, item_id: str) -> bool:
        try:
            self._path(kind, item_id).unlink()
            return True
        except FileNotFoundError:
            return False

    def list_ids(self, kind: str) -> list[str]:
        return sorted(p.stem for p in (self.root / kind).glob("*.json"))
