"""Append-only run traces and their CSV/JSON serialization.

Every iteration contributes one record per link (the price users saw that
iteration) and one per user (transmitted rate, attained layer, admission
status), plus a marker record for each event applied.  Serialization is
bit-exact across runs: floats are written with their shortest round-trip
representation and record order is fully determined by scenario order.

CSV columns: iteration, kind, id, price, rate, layer, note.  Link rows fill
price; user rows fill rate and layer, with note "dismissed" when the user
has been removed by admission control; event rows carry the event kind as
id and details in note.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

KIND_LINK = "link"
KIND_USER = "user"
KIND_EVENT = "event"

CSV_COLUMNS = ("iteration", "kind", "id", "price", "rate", "layer", "note")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    kind: str
    id: str
    price: Optional[float] = None
    rate: Optional[float] = None
    layer: Optional[int] = None
    note: str = ""


@dataclass
class Trace:
    """Ordered record log for one run, with per-entity series accessors."""

    link_ids: Tuple[str, ...]
    user_ids: Tuple[int, ...]
    records: List[TraceRecord] = field(default_factory=list)
    # Structured admission outcomes, one per invoke-admission event.
    admissions: List[dict] = field(default_factory=list)

    def add_link(self, t: int, link_id: str, price: float) -> None:
        self.records.append(TraceRecord(t, KIND_LINK, link_id, price=price))

    def add_user(self, t: int, user_id: int, rate: float, layer: int,
                 admitted: bool) -> None:
        self.records.append(TraceRecord(
            t, KIND_USER, str(user_id), rate=rate, layer=layer,
            note="" if admitted else "dismissed"))

    def add_event(self, t: int, kind: str, note: str) -> None:
        self.records.append(TraceRecord(t, KIND_EVENT, kind, note=note))

    # -- series access ------------------------------------------------

    def link_price_series(self, link_id: str) -> List[float]:
        if link_id not in self.link_ids:
            raise KeyError(f"unknown link '{link_id}'")
        return [r.price for r in self.records
                if r.kind == KIND_LINK and r.id == link_id]

    def user_rate_series(self, user_id: int) -> List[float]:
        if user_id not in self.user_ids:
            raise KeyError(f"unknown user {user_id}")
        uid = str(user_id)
        return [r.rate for r in self.records
                if r.kind == KIND_USER and r.id == uid]

    def user_layer_series(self, user_id: int) -> List[int]:
        uid = str(user_id)
        return [r.layer for r in self.records
                if r.kind == KIND_USER and r.id == uid]

    def user_admitted_series(self, user_id: int) -> List[bool]:
        uid = str(user_id)
        return [r.note != "dismissed" for r in self.records
                if r.kind == KIND_USER and r.id == uid]

    def event_markers(self) -> List[Tuple[int, str, str]]:
        return [(r.iteration, r.id, r.note) for r in self.records
                if r.kind == KIND_EVENT]

    def iterations(self) -> int:
        return max((r.iteration for r in self.records), default=-1) + 1

    # -- serialization -------------------------------------------------

    def to_rows(self) -> List[Tuple[str, ...]]:
        rows = []
        for r in self.records:
            rows.append((
                str(r.iteration),
                r.kind,
                r.id,
                _fmt(r.price),
                _fmt(r.rate),
                "" if r.layer is None else str(r.layer),
                r.note,
            ))
        return rows

    def write_csv(self, path) -> None:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.to_rows():
            lines.append(",".join(row))
        Path(path).write_text("\n".join(lines) + "\n")

    def write_json(self, path) -> None:
        rows = [dict(zip(CSV_COLUMNS, row)) for row in self.to_rows()]
        Path(path).write_text(json.dumps(rows, indent=1) + "\n")


def _fmt(v: Optional[float]) -> str:
    # repr of a float is its shortest round-trip form, stable across runs.
    return "" if v is None else repr(float(v))


def read_csv(path) -> List[Dict[str, str]]:
    """Read a trace CSV back into raw string records (column -> value)."""
    lines = Path(path).read_text().splitlines()
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ValueError(f"{path}: not a trace CSV (bad header)")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"{path}: malformed row: {ln!r}")
        out.append(dict(zip(CSV_COLUMNS, parts)))
    return out
