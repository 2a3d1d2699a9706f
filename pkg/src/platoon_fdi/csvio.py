"""CSV ingestion and persistence: leader profiles, attack vectors, traces.

Writers emit plain comma-separated rows with no quoting. Floats use ``repr``
so they round-trip exactly. All writes go through a temp file and an atomic
rename, so a failure never leaves a partial file behind.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from platoon_fdi.errors import IngestionError
from platoon_fdi.simulator import AttackVector, LeaderProfile, SimulationTrace, compute_gaps

LEADER_HEADER = ["k", "velocity"]
ATTACK_HEADER = ["k", "delta"]
TRACE_HEADER = ["k", "vehicle", "position", "velocity", "acceleration", "control", "gap"]


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def _fmt(value: float) -> str:
    return repr(float(value))


def _read_rows(path, header: list[str]):
    """Yield ``(line_number, row)`` for the data rows of a simple CSV file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestionError(f"cannot read file: {exc.strerror}", path) from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != header:
        got = ",".join(rows[0]) if rows else "<empty file>"
        raise IngestionError(f"expected header {','.join(header)!r}, got {got!r}", path, 1)
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        yield lineno, row


def _parse_indexed(path, header: list[str]) -> list[float]:
    values = []
    for lineno, row in _read_rows(path, header):
        if len(row) != 2:
            raise IngestionError(f"expected 2 fields, got {len(row)}", path, lineno)
        try:
            k = int(row[0])
            value = float(row[1])
        except ValueError:
            raise IngestionError(f"malformed row {','.join(row)!r}", path, lineno) from None
        if not math.isfinite(value):
            raise IngestionError(f"non-finite {header[1]} {row[1]!r}", path, lineno)
        if k != len(values):
            raise IngestionError(f"expected k={len(values)}, got k={k} (k must be contiguous from 0)", path, lineno)
        values.append(value)
    return values


def read_leader_profile(path) -> LeaderProfile:
    velocities = _parse_indexed(path, LEADER_HEADER)
    if not velocities:
        raise IngestionError("leader profile has no data rows", path)
    return LeaderProfile(tuple(velocities))


def write_leader_profile(path, profile: LeaderProfile) -> Path:
    lines = [",".join(LEADER_HEADER)] + [f"{k},{_fmt(v)}" for k, v in enumerate(profile.velocities)]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def write_attack_csv(path, vector: AttackVector) -> Path:
    lines = [",".join(ATTACK_HEADER)] + [f"{k},{_fmt(x)}" for k, x in enumerate(vector.deltas)]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_attack_csv(path, duration: int | None = None) -> AttackVector:
    deltas = _parse_indexed(path, ATTACK_HEADER)
    if duration is not None and len(deltas) != duration:
        raise IngestionError(f"attack vector has {len(deltas)} rows, attack duration is {duration}", path)
    return AttackVector(tuple(deltas))


def write_trace_csv(path, trace: SimulationTrace) -> Path:
    buf = io.StringIO()
    buf.write(",".join(TRACE_HEADER) + "\n")
    for rec in trace.records():
        s, v, a = rec.state
        control = "" if rec.i == 0 else _fmt(rec.u)
        gap = "" if rec.i == 0 else _fmt(rec.gap)
        buf.write(f"{rec.k},{rec.i},{_fmt(s)},{_fmt(v)},{_fmt(a)},{control},{gap}\n")
    return atomic_write_text(path, buf.getvalue())


def read_trace_csv(path) -> SimulationTrace:
    """Load a trace written by :func:`write_trace_csv` (events are not stored)."""
    rows = []
    for lineno, row in _read_rows(path, TRACE_HEADER):
        if len(row) != len(TRACE_HEADER):
            raise IngestionError(f"expected {len(TRACE_HEADER)} fields, got {len(row)}", path, lineno)
        try:
            k, i = int(row[0]), int(row[1])
            state = [float(x) for x in row[2:5]]
            control = float(row[5]) if row[5] else math.nan
        except ValueError:
            raise IngestionError(f"malformed row {','.join(row)!r}", path, lineno) from None
        rows.append((lineno, k, i, state, control))
    if not rows:
        raise IngestionError("trace has no data rows", path)
    steps = max(r[1] for r in rows) + 1
    vehicles = max(r[2] for r in rows) + 1
    if len(rows) != steps * vehicles:
        raise IngestionError(f"trace has {len(rows)} rows, expected {steps} steps x {vehicles} vehicles", path)
    states = np.empty((steps, vehicles, 3))
    controls = np.full((steps, vehicles), np.nan)
    for idx, (lineno, k, i, state, control) in enumerate(rows):
        if (k, i) != divmod(idx, vehicles):
            raise IngestionError(f"row for step {k}, vehicle {i} out of order", path, lineno)
        states[k, i] = state
        controls[k, i] = control
    return SimulationTrace(states, controls, compute_gaps(states))
