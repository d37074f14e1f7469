"""Canonical key-value document encoding.

Settings files, wire-protocol message bodies and trajectory headers all use
the same document format: UTF-8 JSON serialized canonically (sorted keys,
no whitespace). Canonical bytes make documents directly comparable and
checksummable.
"""

from __future__ import annotations

import json
from typing import Any


def encode(doc: Any) -> bytes:
    return json.dumps(
        doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def decode(data: bytes) -> Any:
    return json.loads(data.decode("utf-8"))


def load_file(path: str) -> Any:
    """Read a settings/config document from disk (any JSON, not necessarily canonical)."""
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
