"""Reader for lbcsim sweep CSVs.

Strictly read-only: rows are parsed, keyed, and filtered, never recomputed.
Comment lines starting with '#' (the tool-version banner) are skipped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

MANDATORY_COLUMNS = ("scenario_id", "switch", "pattern", "load",
                     "mean_delay", "mean_cb", "in_order_violations")


class SweepFormatError(ValueError):
    """CSV file does not carry the sweep schema."""


class EmptySelectionError(ValueError):
    """Filters matched no rows."""


@dataclass(frozen=True)
class SweepRow:
    scenario_id: str
    switch: str
    pattern: str
    load: float
    mean_delay: float
    mean_cb: float
    in_order_violations: int


class SweepTable:
    """Sweep rows keyed by (pattern, switch, load)."""

    def __init__(self, rows: list[SweepRow]):
        self.rows = rows

    @classmethod
    def read(cls, path: str) -> "SweepTable":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            lines = [line for line in fh if not line.startswith("#")]
        reader = csv.DictReader(lines)
        header = reader.fieldnames or []
        missing = [c for c in MANDATORY_COLUMNS if c not in header]
        if missing:
            raise SweepFormatError(
                f"{path} is missing mandatory column(s): {', '.join(missing)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                rows.append(SweepRow(
                    scenario_id=rec["scenario_id"],
                    switch=rec["switch"],
                    pattern=rec["pattern"],
                    load=float(rec["load"]),
                    mean_delay=float(rec["mean_delay"]),
                    mean_cb=float(rec["mean_cb"]),
                    in_order_violations=int(rec["in_order_violations"]),
                ))
            except (TypeError, ValueError) as exc:
                raise SweepFormatError(f"{path}:{lineno}: bad row: {exc}") from exc
        return cls(rows)

    def select(self, pattern: str | None = None,
               switch: str | None = None) -> "SweepTable":
        picked = [r for r in self.rows
                  if (pattern is None or r.pattern == pattern)
                  and (switch is None or r.switch == switch)]
        return SweepTable(picked)

    def switches(self) -> list[str]:
        return sorted({r.switch for r in self.rows})

    def scenario_ids(self) -> list[str]:
        return sorted({r.scenario_id for r in self.rows})

    def curve(self, switch: str) -> tuple[list[float], list[float], list[float]]:
        """(loads, mean delays, mean crosspoint occupancies) sorted by load."""
        rows = sorted((r for r in self.rows if r.switch == switch),
                      key=lambda r: r.load)
        return ([r.load for r in rows], [r.mean_delay for r in rows],
                [r.mean_cb for r in rows])
