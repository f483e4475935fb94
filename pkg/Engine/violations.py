import logging
import time
from collections import deque
from dataclasses import dataclass, asdict
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


class TheoremViolation(RuntimeError):
    """A hard invariant failed on an input that satisfied its hypotheses."""

    def __init__(self, check: str, message: str):
        super().__init__(f"[{check}] {message}")
        self.check = check
        self.message = message


@dataclass
class ViolationEntry:
    timestamp: float
    check: str
    message: str
    graph: Optional[Dict[str, Any]]
    source: str


class ViolationCollector:
    def __init__(self, max_entries: int = 200):
        self._entries: deque[ViolationEntry] = deque(maxlen=max_entries)
        self._counts: Dict[str, int] = {}

    def record(
        self,
        check: str,
        message: str,
        graph: Optional[Dict[str, Any]] = None,
        source: str = "invariant"
    ):
        entry = ViolationEntry(
            timestamp=time.time(),
            check=check,
            message=message[:500],
            graph=graph,
            source=source
        )
        self._entries.append(entry)

        key = f"{source}:{check}"
        self._counts[key] = self._counts.get(key, 0) + 1
        logger.error(f"Theorem violation [{check}]: {message}")

    @property
    def fired(self) -> bool:
        return bool(self._counts)

    def get_recent(self, limit: int = 50, source: Optional[str] = None) -> List[Dict[str, Any]]:
        entries = list(self._entries)
        if source:
            entries = [e for e in entries if e.source == source]
        return [asdict(e) for e in entries[-limit:]]

    def get_summary(self) -> Dict[str, Any]:
        by_check: Dict[str, int] = {}
        for e in self._entries:
            by_check[e.check] = by_check.get(e.check, 0) + 1

        return {
            "total": sum(self._counts.values()),
            "counts_all_time": dict(sorted(self._counts.items())),
            "by_check": dict(sorted(by_check.items())),
        }

    def report_entries(self) -> List[Dict[str, Any]]:
        """Entries without timestamps, for the deterministic part of a report."""
        return [
            {"check": e.check, "message": e.message, "graph": e.graph, "source": e.source}
            for e in self._entries
        ]

    def clear(self):
        self._entries.clear()
        self._counts.clear()


violation_collector = ViolationCollector()


def hard_failure(check: str, message: str, graph: Optional[Any] = None, source: str = "invariant"):
    payload = graph.to_payload() if graph is not None and hasattr(graph, "to_payload") else graph
    violation_collector.record(check, message, graph=payload, source=source)
    raise TheoremViolation(check, message)
