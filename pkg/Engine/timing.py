import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Optional


@dataclass
class StepTimings:
    """Running totals for one named step; every call is counted."""

    count: int = 0
    total: float = 0.0
    fastest: Optional[float] = None
    slowest: float = 0.0

    def add(self, elapsed_ms: float):
        self.count += 1
        self.total += elapsed_ms
        self.slowest = max(self.slowest, elapsed_ms)
        self.fastest = elapsed_ms if self.fastest is None else min(self.fastest, elapsed_ms)

    def to_payload(self) -> Dict[str, float]:
        return {
            "count": self.count,
            "total": round(self.total, 3),
            "min": round(self.fastest or 0.0, 3),
            "avg": round(self.total / self.count, 3) if self.count else 0.0,
            "max": round(self.slowest, 3),
        }


class RunTracker:
    def __init__(self):
        self._steps: Dict[str, StepTimings] = {}
        self.started_at = time.time()

    def record(self, name: str, elapsed_ms: float):
        self._steps.setdefault(name, StepTimings()).add(elapsed_ms)

    @contextmanager
    def track(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.record(name, (time.perf_counter() - start) * 1000)

    def get_metrics(self) -> Dict[str, Any]:
        now = time.time()
        return {
            "started_at": round(self.started_at, 3),
            "finished_at": round(now, 3),
            "wall_seconds": round(now - self.started_at, 3),
            "timings_ms": {name: step.to_payload() for name, step in sorted(self._steps.items())},
        }

    def reset(self):
        self._steps.clear()
        self.started_at = time.time()


run_tracker = RunTracker()
