"""The record every command leaves next to its outputs."""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from category_discovery import artifacts, settings
from category_discovery.exceptions import MalformedInput

FILENAME = "manifest.json"


def file_digest(path: Path) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """What was run, with what, and what it produced.

    `outputs` maps each data file name to its digest; the manifest and the
    run log are not listed. `duration` is the only field a replay may change.
    """
    subcommand: str
    argv: List[str]
    parameters: Dict[str, Any]
    seed: Optional[int]
    inputs: List[str] = field(default_factory=list)
    outputs: Dict[str, str] = field(default_factory=dict)
    version: str = settings.VERSION
    duration: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict, *, path: Optional[Path] = None) -> RunManifest:
        try:
            return cls(**data)
        except TypeError as e:
            raise MalformedInput(f"not a run manifest: {e}", path=str(path) if path else None) from e

    def save_as(self, path: Path) -> None:
        artifacts.write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: Path) -> RunManifest:
        path = Path(path)
        if path.is_dir():
            path = path / FILENAME
        return cls.from_dict(artifacts.read_json(path), path=path)

    def differences(self, other: RunManifest) -> List[str]:
        """Output files whose digests differ between two runs, or that only one produced."""
        names = sorted(set(self.outputs) | set(other.outputs))
        return [name for name in names if self.outputs.get(name) != other.outputs.get(name)]
