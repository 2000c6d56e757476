"""Trajectory, manifest, and report file formats.

Trajectories travel as dense CSV (`t,agent_id,x,y`, every agent present
at every step, sorted by time then agent). Coordinates are written with
17 significant digits so positions round-trip exactly and re-derived
headings match bit for bit. Manifests are JSON arrays naming the event
files of a collection, with informed ids and optional class labels and
seeds. Reports are JSON with every numeric finite and enough config
echoed to reproduce the run.
"""

import json
import logging
from pathlib import Path

import numpy as np

from .dirmath import directions_from_positions
from .errors import ParseError
from .simulate import MODELS, TrajectorySet

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = "t,agent_id,x,y"


def _fmt(v):
    return format(float(v), ".17g")


def write_trajectory_csv(path, ts, agent_ids=None):
    """Write a TrajectorySet's positions; agent ids default to 1..n."""
    n, n_points = ts.positions.shape[0], ts.positions.shape[1]
    if agent_ids is None:
        agent_ids = list(range(1, n + 1))
    lines = [TRAJECTORY_HEADER]
    for t in range(n_points):
        for k in range(n):
            x, y = ts.positions[k, t]
            lines.append(f"{t},{agent_ids[k]},{_fmt(x)},{_fmt(y)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path, informed_ids=(), fill=None):
    """Parse a trajectory CSV into a TrajectorySet.

    The time grid must be dense: every agent at every step from 0 to T.
    With fill="forward", a missing (t, agent) row inherits the agent's
    previous position instead (the number of filled cells is logged);
    gaps at t=0 are never fillable. Raises ParseError naming the file
    and line on any malformed or missing data.
    """
    path = Path(path)
    cells = {}
    agents = set()
    max_t = -1
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header.strip() != TRAJECTORY_HEADER:
            raise ParseError(f"{path}:1: expected header '{TRAJECTORY_HEADER}'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                t = int(parts[0])
                agent = int(parts[1])
                x = float(parts[2])
                y = float(parts[3])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if t < 0 or agent <= 0:
                raise ParseError(
                    f"{path}:{lineno}: t must be >= 0 and agent_id positive"
                )
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ParseError(f"{path}:{lineno}: non-finite coordinate")
            if (t, agent) in cells:
                raise ParseError(f"{path}:{lineno}: duplicate row for t={t} agent={agent}")
            cells[(t, agent)] = (x, y)
            agents.add(agent)
            max_t = max(max_t, t)
    if not cells:
        raise ParseError(f"{path}:1: no data rows")
    if max_t < 1:
        raise ParseError(f"{path}: need at least 2 time steps")
    agent_ids = sorted(agents)
    positions = np.empty((len(agent_ids), max_t + 1, 2))
    filled = 0
    for k, agent in enumerate(agent_ids):
        for t in range(max_t + 1):
            if (t, agent) in cells:
                positions[k, t] = cells[(t, agent)]
            elif fill == "forward" and t > 0:
                positions[k, t] = positions[k, t - 1]
                filled += 1
            else:
                raise ParseError(
                    f"{path}: missing row for agent {agent} at t={t} "
                    f"(dense grid required; use forward fill to carry positions)"
                )
    if filled:
        logger.info("%s: forward-filled %d missing cells", path, filled)
    informed = frozenset(
        agent_ids.index(a) for a in informed_ids if a in agents
    )
    return TrajectorySet(
        positions=positions,
        directions=directions_from_positions(positions),
        informed=informed,
        provenance={"source": str(path), "agent_ids": agent_ids},
    )


def write_manifest(path, entries):
    """Write a manifest: a JSON array of event records."""
    Path(path).write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n")


def read_manifest(path):
    """Parse and validate a manifest; paths resolve relative to it."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, list) or not raw:
        raise ParseError(f"{path}:1: manifest must be a nonempty JSON array")
    entries = []
    for k, item in enumerate(raw):
        if not isinstance(item, dict) or "path" not in item:
            raise ParseError(f"{path}: entry {k} must be an object with a 'path'")
        event_path = (path.parent / item["path"]).resolve()
        if not event_path.exists():
            raise ParseError(f"{path}: entry {k}: no such file {event_path}")
        label = item.get("label")
        if label is not None and label not in MODELS:
            raise ParseError(
                f"{path}: entry {k}: label {label!r} not one of {sorted(MODELS)}"
            )
        entries.append(
            {
                "path": event_path,
                "informed_ids": list(item.get("informed_ids", [])),
                "label": label,
                "seed": item.get("seed"),
            }
        )
    return entries


def load_manifest_events(path, fill=None):
    """Read every event of a manifest; returns (events, entries)."""
    entries = read_manifest(path)
    events = [
        read_trajectory_csv(e["path"], informed_ids=e["informed_ids"], fill=fill)
        for e in entries
    ]
    return events, entries


def _to_plain(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not np.isfinite(v):
            raise ValueError("reports must not contain non-finite numbers")
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_report_json(path, report):
    """Write a report dict as deterministic, diffable JSON."""
    Path(path).write_text(
        json.dumps(_to_plain(report), indent=2, sort_keys=True) + "\n"
    )


def write_per_step_csv(path, per_step_quantiles, per_step_mean):
    """Per-step error distributions, one row per (strategy, step)."""
    lines = ["strategy,t,mean,p25,p50,p75"]
    for strategy in sorted(per_step_mean):
        mean = per_step_mean[strategy]
        qs = per_step_quantiles[strategy]
        for t in range(len(mean)):
            lines.append(
                f"{strategy},{t},{_fmt(mean[t])},{_fmt(qs[25][t])},"
                f"{_fmt(qs[50][t])},{_fmt(qs[75][t])}"
            )
    Path(path).write_text("\n".join(lines) + "\n")
