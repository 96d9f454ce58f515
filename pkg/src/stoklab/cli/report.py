"""Report rows and their CSV / JSON serialisation."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

COLUMNS = ("check_id", "estimate", "stderr", "oracle", "oracle_source", "tolerance", "pass", "seconds")


def fmt(x: float) -> str:
    """17 significant digits, locale independent."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


@dataclass(frozen=True)
class Row:
    check_id: str
    estimate: float
    stderr: float
    oracle: float
    oracle_source: str
    tolerance: float

    def __post_init__(self):
        if not self.oracle_source:
            raise ValueError(f"row {self.check_id} needs an oracle source")
        for name in ("estimate", "stderr", "oracle", "tolerance"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def passed(self) -> bool:
        """|estimate - oracle| <= tolerance; recomputable from the report alone."""
        return bool(abs(self.estimate - self.oracle) <= self.tolerance)


@dataclass
class Report:
    experiment: str
    seed: int
    params: dict
    rows: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    error: str | None = None

    def add(self, row: Row, seconds: float = 0.0) -> None:
        self.rows.append(row)
        self.seconds.append(float(seconds))

    @property
    def all_passed(self) -> bool:
        return self.error is None and bool(self.rows) and all(r.passed for r in self.rows)

    def records(self) -> list[dict]:
        return [
            {
                "check_id": r.check_id,
                "estimate": r.estimate,
                "stderr": r.stderr,
                "oracle": r.oracle,
                "oracle_source": r.oracle_source,
                "tolerance": r.tolerance,
                "pass": r.passed,
                "seconds": s,
            }
            for r, s in zip(self.rows, self.seconds)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(COLUMNS) + "\n")
        for rec in self.records():
            cells = []
            for col in COLUMNS:
                v = rec[col]
                if col == "pass":
                    cells.append("true" if v else "false")
                elif col in ("check_id", "oracle_source"):
                    cells.append(_csv_text(v))
                else:
                    cells.append(fmt(v))
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        def num(v):
            v = float(v)
            return float(fmt(v)) if math.isfinite(v) else None

        rows = []
        for rec in self.records():
            rows.append({c: (num(rec[c]) if c in ("estimate", "stderr", "oracle", "tolerance", "seconds") else rec[c])
                         for c in COLUMNS})
        doc = {
            "experiment": self.experiment,
            "seed": self.seed,
            "params": self.params,
            "columns": list(COLUMNS),
            "rows": rows,
            "all_pass": self.all_passed,
        }
        if self.error is not None:
            doc["error"] = self.error
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _csv_text(s: str) -> str:
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def parse_csv(text: str) -> list[dict]:
    """Read a report back (used to recompute pass flags)."""
    import csv

    reader = csv.DictReader(io.StringIO(text))
    out = []
    for rec in reader:
        out.append(
            {
                "check_id": rec["check_id"],
                "estimate": float(rec["estimate"]),
                "stderr": float(rec["stderr"]),
                "oracle": float(rec["oracle"]),
                "oracle_source": rec["oracle_source"],
                "tolerance": float(rec["tolerance"]),
                "pass": rec["pass"] == "true",
                "seconds": float(rec["seconds"]),
            }
        )
    return out
