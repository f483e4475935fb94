from typing import Any, Dict, Hashable, Optional

_MISSING = object()


class MemoTable:
    """Per-process memo with hit/miss counters. Cleared wholesale when full."""

    def __init__(self, max_entries: int = 200_000):
        self._table: Dict[Hashable, Any] = {}
        self.max_entries = max_entries
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[Any]:
        data = self._table.get(key, _MISSING)
        if data is _MISSING:
            self.misses += 1
            return None
        self.hits += 1
        return data

    def set(self, key: Hashable, data: Any):
        if len(self._table) >= self.max_entries:
            self._table.clear()
        self._table[key] = data

    def __len__(self) -> int:
        return len(self._table)

    def clear(self):
        self._table.clear()
        self.hits = 0
        self.misses = 0

    def get_stats(self) -> Dict[str, Any]:
        lookups = self.hits + self.misses
        return {
            "entries": len(self._table),
            "hits": self.hits,
            "misses": self.misses,
            "hit_rate": round(self.hits / lookups, 4) if lookups else None,
        }


minor_memo = MemoTable()
