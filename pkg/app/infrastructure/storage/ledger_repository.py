# File: app/infrastructure/storage/ledger_repository.py

import logging
from pathlib import Path
from threading import Lock
from typing import Optional

from app.core.entities.ledger import BindingLedger
from app.core.services import binding_ledger

logger = logging.getLogger(__name__)


class LedgerRepository:
    """
    JSON file holding one BindingLedger (mass -> J, provenance, timestamps).

    Single writer: record() serialises updates; readers get snapshots.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = Lock()

    def load(self, d: int, p: float) -> BindingLedger:
        """The stored ledger, or an empty one for (d, p) if the file does not exist."""
        if not self.path.is_file():
            return BindingLedger(d=d, p=p)
        ledger = BindingLedger.model_validate_json(self.path.read_text(encoding="utf-8"))
        if ledger.d != d or ledger.p != p:
            raise ValueError(f"ledger {self.path} holds d={ledger.d} p={ledger.p}, not d={d} p={p}")
        return ledger

    def save(self, ledger: BindingLedger) -> Path:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(ledger.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return self.path

    def record(self, ledger: BindingLedger, mass: float, J: float, provenance: str,
               e_lt: Optional[float] = None) -> BindingLedger:
        with self._lock:
            updated = binding_ledger.record(ledger, mass, J, provenance, e_lt=e_lt)
            self.save(updated)
            logger.debug("Ledger %s: J(%.4g) = %.10f", self.path.name, mass, J)
            return updated
