"""Line-delimited run traces: one JSON record per tick, append-only,
flushed per tick, bit-stable for equal seeds and command logs."""

from __future__ import annotations

import json


class TraceWriter:
    def __init__(self, path=None):
        self.records: list[str] = []
        self._fh = open(path, "w", encoding="utf-8") if path else None

    def write(self, record: dict) -> None:
        line = json.dumps(record, separators=(",", ":"), allow_nan=False)
        self.records.append(line)
        if self._fh is not None:
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def text(self) -> str:
        return "\n".join(self.records) + ("\n" if self.records else "")
