"""Episode traces: per-step records with versioned JSONL round-trip.

Serialization is canonical (sorted keys, compact separators, repr floats) so
that identical episodes produce byte-identical files and checksums.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .metrics import MetricSample

TRACE_FORMAT = "driftplan-trace"
TRACE_VERSION = 1


class TraceError(ValueError):
    pass


class TraceParseError(TraceError):
    pass


class TraceVersionError(TraceError):
    pass


@dataclass(frozen=True)
class StepRecord:
    t: float
    pose: tuple[float, float, float]  # x, y, psi
    wind: tuple[float, float]  # speed, direction
    targets: tuple[tuple[int, float, float], ...]  # id, x, y
    detections: tuple[tuple[float, float, float, int], ...]  # x, y, range, true id
    metrics: MetricSample


@dataclass(frozen=True)
class DecisionRecord:
    t: float
    chosen_index: int
    stall_s: float
    # per candidate: index, heading change (deg), entropy term, tracking term, w, total
    candidates: tuple[tuple[int, float, float, float, float, float], ...]


@dataclass(frozen=True)
class SnapshotRecord:
    t: float
    probabilities: tuple[tuple[float, ...], ...]


@dataclass
class EpisodeTrace:
    config_hash: str
    seed: int
    rows: int
    cols: int
    steps: list[StepRecord] = field(default_factory=list)
    decisions: list[DecisionRecord] = field(default_factory=list)
    snapshots: list[SnapshotRecord] = field(default_factory=list)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def serialize(trace: EpisodeTrace) -> str:
    """Canonical JSONL: header line, then records in chronological order
    (decisions made during a step precede its step record)."""
    lines = [
        _dump(
            {
                "format": TRACE_FORMAT,
                "version": TRACE_VERSION,
                "config_hash": trace.config_hash,
                "seed": trace.seed,
                "rows": trace.rows,
                "cols": trace.cols,
            }
        )
    ]
    di = si = 0
    for step in trace.steps:
        while di < len(trace.decisions) and trace.decisions[di].t <= step.t:
            d = trace.decisions[di]
            lines.append(
                _dump(
                    {
                        "type": "decision",
                        "t": d.t,
                        "chosen": d.chosen_index,
                        "stall_s": d.stall_s,
                        "candidates": [list(c) for c in d.candidates],
                    }
                )
            )
            di += 1
        ms = step.metrics
        lines.append(
            _dump(
                {
                    "type": "step",
                    "t": step.t,
                    "pose": list(step.pose),
                    "wind": list(step.wind),
                    "targets": [list(x) for x in step.targets],
                    "detections": [list(x) for x in step.detections],
                    "metrics": [ms.t, ms.H, ms.mse, ms.n_detections_step, ms.mean_detections],
                }
            )
        )
        while si < len(trace.snapshots) and trace.snapshots[si].t <= step.t:
            s = trace.snapshots[si]
            lines.append(
                _dump({"type": "snapshot", "t": s.t, "p": [list(r) for r in s.probabilities]})
            )
            si += 1
    return "\n".join(lines) + "\n"


def checksum(trace: EpisodeTrace) -> str:
    return hashlib.sha256(serialize(trace).encode()).hexdigest()


def write_trace(trace: EpisodeTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(trace))


def _parse_header(line: str) -> dict:
    try:
        head = json.loads(line)
    except json.JSONDecodeError as e:
        raise TraceParseError(f"line 1: invalid JSON header ({e.msg})") from e
    if not isinstance(head, dict) or head.get("format") != TRACE_FORMAT:
        raise TraceParseError("line 1: not a trace file (missing format tag)")
    version = head.get("version")
    if version != TRACE_VERSION:
        raise TraceVersionError(f"trace version {version!r}, this build reads {TRACE_VERSION}")
    for key in ("config_hash", "seed", "rows", "cols"):
        if key not in head:
            raise TraceParseError(f"line 1: header missing {key!r}")
    return head


def deserialize(text: str) -> EpisodeTrace:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TraceParseError("empty trace file")
    head = _parse_header(lines[0])
    trace = EpisodeTrace(
        config_hash=head["config_hash"],
        seed=int(head["seed"]),
        rows=int(head["rows"]),
        cols=int(head["cols"]),
    )
    last_t = None
    for n, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceParseError(f"line {n}: invalid or truncated record ({e.msg})") from e
        kind = rec.get("type")
        if kind == "step":
            ms = rec["metrics"]
            t = float(rec["t"])
            if last_t is not None and t <= last_t:
                raise TraceParseError(f"line {n}: step time {t} not increasing")
            last_t = t
            trace.steps.append(
                StepRecord(
                    t=t,
                    pose=tuple(rec["pose"]),
                    wind=tuple(rec["wind"]),
                    targets=tuple((int(a), b, c) for a, b, c in rec["targets"]),
                    detections=tuple((a, b, c, int(d)) for a, b, c, d in rec["detections"]),
                    metrics=MetricSample(ms[0], ms[1], ms[2], int(ms[3]), ms[4]),
                )
            )
        elif kind == "decision":
            trace.decisions.append(
                DecisionRecord(
                    t=float(rec["t"]),
                    chosen_index=int(rec["chosen"]),
                    stall_s=float(rec["stall_s"]),
                    candidates=tuple(
                        (int(c[0]), c[1], c[2], c[3], c[4], c[5]) for c in rec["candidates"]
                    ),
                )
            )
        elif kind == "snapshot":
            trace.snapshots.append(
                SnapshotRecord(t=float(rec["t"]), probabilities=tuple(tuple(r) for r in rec["p"]))
            )
        else:
            raise TraceParseError(f"line {n}: unknown record type {kind!r}")
    return trace


def replay(path) -> EpisodeTrace:
    """Load and validate a stored trace file."""
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize(fh.read())


def check_geometry(trace: EpisodeTrace, rows: int, cols: int) -> None:
    if (trace.rows, trace.cols) != (rows, cols):
        raise TraceError(
            f"trace geometry {trace.rows}x{trace.cols} does not match expected {rows}x{cols}"
        )


def decisions_csv_text(trace: EpisodeTrace, wall_s: list[float] | None = None) -> str:
    """One row per evaluated candidate per replan; wall_s (when given) must
    hold one wall-clock duration per decision, in order."""
    lines = ["t,candidate,heading_change_deg,entropy_term,tracking_term,w,total,chosen,wall_s"]
    for k, d in enumerate(trace.decisions):
        wall = "" if wall_s is None else repr(wall_s[k])
        if not d.candidates:
            lines.append(f"{d.t!r},{d.chosen_index},,,,,,1,{wall}")
            continue
        for c in d.candidates:
            chosen = 1 if c[0] == d.chosen_index else 0
            lines.append(
                f"{d.t!r},{c[0]},{c[1]!r},{c[2]!r},{c[3]!r},{c[4]!r},{c[5]!r},{chosen},{wall}"
            )
    return "\n".join(lines) + "\n"
