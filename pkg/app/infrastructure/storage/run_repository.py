# File: app/infrastructure/storage/run_repository.py
"""
Flat-file persistence of run records: one directory per run holding
record.json, the CSV curves, summary.txt and optional orbital dumps.
"""

import logging
from pathlib import Path
from typing import List

from app.core.entities.experiment import RunRecord

logger = logging.getLogger(__name__)

RECORD_NAME = "record.json"
SUMMARY_NAME = "summary.txt"


class RunRecordRepository:
    """Reads and writes RunRecord files under a run directory."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)

    def path_for(self, name: str) -> Path:
        return self.directory / name

    def save(self, record: RunRecord) -> Path:
        """Writes record.json (UTF-8, LF, two-space indent)."""
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(RECORD_NAME)
        path.write_text(record.model_dump_json(indent=2) + "\n", encoding="utf-8", newline="\n")
        logger.info("Run record written to %s", path)
        return path

    def load(self) -> RunRecord:
        return self.load_file(self.path_for(RECORD_NAME))

    @staticmethod
    def load_file(path: Path) -> RunRecord:
        return RunRecord.model_validate_json(Path(path).read_text(encoding="utf-8"))

    def write_summary(self, lines: List[str]) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(SUMMARY_NAME)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        return path
