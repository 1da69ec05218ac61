"""On-disk sample cache: one binary file per entry, content-hash keyed.

Entry format: 16-byte magic, uint32 format version, 32-byte SHA-256 of the
payload, payload. Keys are content hashes of the logical inputs (scene id,
patch spec or tile index, normalization constants) so any augmentation or
normalization change invalidates naturally. Writes land in a temp file and
are renamed atomically; readers never see partial entries, and a corrupted
entry reads as absent (with eviction and a warning).
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
import tempfile
import warnings
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

MAGIC = b"FPRNTS-CACHE\x00\x00\x00\x00"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<16sI32s")


def sample_key(scene_id: str, variant, norm) -> str:
    """Stable hex key from the logical content of one cached sample."""
    if hasattr(variant, "to_dict"):
        variant = variant.to_dict()
    material = json.dumps(
        {"scene_id": scene_id, "variant": variant, "norm": _jsonable(norm)},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(material.encode()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, (list, tuple)):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    return obj


def encode_sample(image: np.ndarray, mask: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.savez(buf, image=image, mask=mask)
    return buf.getvalue()


def decode_sample(payload: bytes) -> Tuple[np.ndarray, np.ndarray]:
    with np.load(io.BytesIO(payload)) as z:
        return z["image"], z["mask"]


class Cache:
    """Content-addressed store under <dir>/v<version>/<key[:2]>/<key>.bin."""

    def __init__(self, root, version: int = FORMAT_VERSION):
        self.root = Path(root)
        self.version = version

    def path_for(self, key: str) -> Path:
        return self.root / f"v{self.version}" / key[:2] / f"{key}.bin"

    def has(self, key: str) -> bool:
        return self.path_for(key).is_file()

    def put(self, key: str, payload: bytes) -> Path:
        path = self.path_for(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = _HEADER.pack(MAGIC, self.version, hashlib.sha256(payload).digest()) + payload
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(blob)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path

    def get(self, key: str) -> Optional[bytes]:
        """Payload bytes, or None when absent or corrupt (corrupt entries
        are evicted)."""
        path = self.path_for(key)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        if len(blob) < _HEADER.size:
            return self._evict(path, "truncated header")
        magic, version, digest = _HEADER.unpack_from(blob)
        payload = blob[_HEADER.size :]
        if magic != MAGIC or version != self.version:
            return self._evict(path, "bad magic/version")
        if hashlib.sha256(payload).digest() != digest:
            return self._evict(path, "content hash mismatch")
        return payload

    def _evict(self, path: Path, reason: str) -> None:
        warnings.warn(f"evicting corrupt cache entry {path.name}: {reason}")
        try:
            path.unlink()
        except OSError:
            pass
        return None
