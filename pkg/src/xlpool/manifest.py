"""JSON manifests pairing local/guide tensor files per image."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    local_path: Path
    guide_path: Path
    label: str | None = None


def load_manifest(path) -> list[ManifestEntry]:
    """Parse a manifest: a JSON list of {image_id, local_path, guide_path,
    optional label}. Relative paths resolve against the manifest's
    directory. Image ids must be unique."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise SchemaError(f"{path}: manifest must be a JSON list")
    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise SchemaError(f"{path}: entry {i} is not an object")
        missing = {"image_id", "local_path", "guide_path"} - set(item)
        if missing:
            raise SchemaError(f"{path}: entry {i} missing {sorted(missing)}")
        image_id = str(item["image_id"])
        if image_id in seen:
            raise SchemaError(f"{path}: duplicate image_id {image_id!r}")
        seen.add(image_id)
        label = item.get("label")
        entries.append(ManifestEntry(
            image_id=image_id,
            local_path=base / str(item["local_path"]),
            guide_path=base / str(item["guide_path"]),
            label=None if label is None else str(label)))
    return entries
