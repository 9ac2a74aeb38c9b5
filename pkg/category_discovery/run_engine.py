from __future__ import annotations

import logging
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from category_discovery import manifest as manifest_module
from category_discovery.exceptions import DatasetIOError, InvalidParameter
from category_discovery.manifest import RunManifest
from category_discovery.message_log import MessageLog

logger = logging.getLogger(__name__)

LOG_FILENAME = "run.log"


def _default_run_name() -> str:
    return datetime.now().strftime("%Y%m%d-%H%M%S-%f")


class RunEngine:
    """Owns one command's output directory, its message log and its manifest."""

    def __init__(
        self,
        *,
        subcommand: str,
        out_dir: Path,
        argv: List[str],
        parameters: Dict[str, Any],
        seed: Optional[int] = None,
    ):
        self.subcommand = subcommand
        self.out_dir = Path(out_dir)
        self.message_log = MessageLog()
        self.argv = list(argv)
        self.parameters = parameters
        self.seed = seed
        self.inputs: List[str] = []
        self.outputs: List[Path] = []
        self._started = time.perf_counter()

    @classmethod
    def create(
        cls,
        *,
        subcommand: str,
        out_root: Path,
        name: Optional[str] = None,
        out_dir: Optional[Path] = None,
        **kwargs: Any,
    ) -> RunEngine:
        """Make ``<out_root>/<subcommand>/<name or timestamp>/`` (or `out_dir`) and start a run there."""
        if out_dir is None:
            out_dir = Path(out_root) / subcommand / (name or _default_run_name())
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DatasetIOError(str(out_dir), e.strerror or str(e)) from e
        return cls(subcommand=subcommand, out_dir=out_dir, **kwargs)

    def output(self, filename: str) -> Path:
        """Path of a data file inside the run directory, recorded for the manifest."""
        path = self.out_dir / filename
        if path.parent != self.out_dir:
            raise InvalidParameter(f"output '{filename}' would leave the run directory")
        if path not in self.outputs:
            self.outputs.append(path)
        return path

    def add_input(self, path: Path) -> Path:
        self.inputs.append(str(path))
        return Path(path)

    def finish(self) -> RunManifest:
        """Hash the outputs, then write ``manifest.json`` and ``run.log``."""
        manifest = RunManifest(
            subcommand=self.subcommand,
            argv=self.argv,
            parameters=self.parameters,
            seed=self.seed,
            inputs=self.inputs,
            outputs={p.name: manifest_module.file_digest(p) for p in self.outputs if p.exists()},
            duration=round(time.perf_counter() - self._started, 3),
        )
        manifest.save_as(self.out_dir / manifest_module.FILENAME)
        self.message_log.save_as(self.out_dir / LOG_FILENAME)
        logger.debug("Run finished in %.3fs, outputs in %s", manifest.duration, self.out_dir)
        return manifest
