"""Flight schedules and the flight-conflict graph.

Each flight occupies a gate over the half-open interval ``[arrival, departure)``
measured in integer minutes. Two flights conflict (cannot share a gate) when
their intervals intersect, so a proper k-coloring of the conflict graph is a
feasible assignment of flights to k gates.
"""

from __future__ import annotations

import colorsys
import csv
import io
import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError

_GATES_RE = re.compile(r"^\s*#\s*gates\s*=\s*(\S+)\s*$", re.IGNORECASE)
_HHMM_RE = re.compile(r"^(\d{1,2}):(\d{2})$")

# fixed palette for DOT output; indices beyond it fall back to generated hues
PALETTE = (
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4",
    "#46f0f0", "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff",
)


@dataclass(frozen=True)
class Flight:
    id: str
    arrival: int
    departure: int

    def __post_init__(self):
        if self.arrival >= self.departure:
            raise InputError(
                f"flight {self.id!r}: arrival {self.arrival} is not before departure {self.departure}"
            )


@dataclass(frozen=True)
class FlightSchedule:
    flights: tuple[Flight, ...]
    gate_count: int

    def __post_init__(self):
        object.__setattr__(self, "flights", tuple(self.flights))
        if self.gate_count < 1:
            raise InputError(f"gate count must be >= 1, got {self.gate_count}")
        seen = set()
        for f in self.flights:
            if f.id in seen:
                raise InputError(f"duplicate flight id {f.id!r}")
            seen.add(f.id)

    def __len__(self):
        return len(self.flights)

    @property
    def ids(self) -> list[str]:
        return [f.id for f in self.flights]


@dataclass(frozen=True)
class ConflictGraph:
    """Undirected simple graph on nodes ``0..n-1``.

    ``edges`` holds each unordered pair once as ``(i, j)`` with ``i < j``.
    """

    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        norm = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise InputError(f"self-loop on node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InputError(f"edge ({i}, {j}) out of range for n={self.n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.n:
                raise InputError(f"{len(labels)} labels given for {self.n} nodes")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_adjacency(cls, adjacency, labels=None) -> "ConflictGraph":
        """Build from a 0/1 matrix; a symmetric matrix contributes each edge once."""
        a = np.asarray(adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputError("adjacency must be a square matrix")
        n = a.shape[0]
        edges = {(i, j) for i in range(n) for j in range(n) if i != j and (a[i, j] or a[j, i])}
        if any(a[i, i] for i in range(n)):
            raise InputError("adjacency has a nonzero diagonal")
        return cls(n, frozenset(edges), labels)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int8)
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1
        return a

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        nb = [set() for _ in range(self.n)]
        for i, j in self.edges:
            nb[i].add(j)
            nb[j].add(i)
        return tuple(frozenset(s) for s in nb)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def to_json(self) -> dict:
        out = {"n": self.n, "edges": [list(e) for e in self.sorted_edges()]}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "ConflictGraph":
        try:
            n = int(data["n"])
            edges = frozenset(tuple(e) for e in data["edges"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed graph JSON: {exc}") from exc
        for e in edges:
            if len(e) != 2:
                raise InputError(f"malformed edge {list(e)}")
        return cls(n, edges, data.get("labels"))


def parse_time(token: str) -> int:
    """Parse integer minutes or ``HH:MM`` into minutes."""
    token = token.strip()
    m = _HHMM_RE.match(token)
    if m:
        hh, mm = int(m.group(1)), int(m.group(2))
        if mm >= 60:
            raise ValueError(f"minutes out of range in {token!r}")
        return hh * 60 + mm
    return int(token)


def parse_schedule(text: str, gate_count: int | None = None) -> FlightSchedule:
    """Parse CSV text with header ``id,arrival,departure``.

    The gate count comes from a ``# gates=<k>`` directive line unless
    ``gate_count`` is passed, in which case the argument wins.
    Errors carry the 1-based line number of the offending row.
    """
    directive = None
    rows: list[tuple[int, str]] = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = _GATES_RE.match(stripped)
            if m:
                try:
                    directive = int(m.group(1))
                except ValueError:
                    raise InputError(f"line {lineno}: bad gates directive {stripped!r}") from None
            continue
        rows.append((lineno, line))

    if not rows:
        raise InputError("schedule has no header row")
    header_line, header = rows[0]
    cols = [c.strip().lower() for c in next(csv.reader([header]))]
    if cols != ["id", "arrival", "departure"]:
        raise InputError(f"line {header_line}: expected header 'id,arrival,departure', got {header.strip()!r}")

    flights = []
    seen: dict[str, int] = {}
    for lineno, line in rows[1:]:
        fields = [c.strip() for c in next(csv.reader([line]))]
        if len(fields) != 3 or not fields[0]:
            raise InputError(f"line {lineno}: expected 3 fields 'id,arrival,departure', got {line.strip()!r}")
        fid, arr, dep = fields
        try:
            arrival, departure = parse_time(arr), parse_time(dep)
        except ValueError:
            raise InputError(f"line {lineno}: bad timestamp in {line.strip()!r}") from None
        if fid in seen:
            raise InputError(f"line {lineno}: duplicate flight id {fid!r} (first seen on line {seen[fid]})")
        if arrival >= departure:
            raise InputError(f"line {lineno}: arrival {arrival} is not before departure {departure}")
        seen[fid] = lineno
        flights.append(Flight(fid, arrival, departure))

    k = gate_count if gate_count is not None else directive
    if k is None:
        raise InputError("missing gate count: add a '# gates=<k>' line or pass it explicitly")
    return FlightSchedule(tuple(flights), int(k))


def format_schedule(schedule: FlightSchedule) -> str:
    out = io.StringIO()
    out.write(f"# gates={schedule.gate_count}\n")
    out.write("id,arrival,departure\n")
    for f in schedule.flights:
        out.write(f"{f.id},{f.arrival},{f.departure}\n")
    return out.getvalue()


def build_conflict_graph(schedule: FlightSchedule, buffer: int = 0) -> ConflictGraph:
    """Overlap graph of the schedule's gate-occupancy intervals.

    Flights i and j conflict iff ``[arr_i, dep_i + buffer)`` and
    ``[arr_j, dep_j + buffer)`` intersect, so with the default ``buffer=0``
    back-to-back flights (``dep_i == arr_j``) do not conflict, and with a
    positive buffer any pair separated by less than ``buffer`` minutes does.
    """
    if buffer < 0:
        raise InputError(f"buffer must be >= 0, got {buffer}")
    fl = schedule.flights
    edges = set()
    for i in range(len(fl)):
        for j in range(i + 1, len(fl)):
            a, b = fl[i], fl[j]
            if a.arrival < b.departure + buffer and b.arrival < a.departure + buffer:
                edges.add((i, j))
    return ConflictGraph(len(fl), frozenset(edges), tuple(schedule.ids))


def _color_hex(c: int) -> str:
    if c < len(PALETTE):
        return PALETTE[c]
    # golden-ratio hue walk keeps generated colors distinct
    h = (c * 0.6180339887498949) % 1.0
    r, g, b = colorsys.hsv_to_rgb(h, 0.55, 0.95)
    return "#{:02x}{:02x}{:02x}".format(int(r * 255), int(g * 255), int(b * 255))


def export_dot(graph: ConflictGraph, coloring: Mapping[int, int] | Sequence[int] | None = None) -> str:
    """Render the graph in Graphviz DOT, filling nodes by color when given."""
    if coloring is not None:
        if not isinstance(coloring, Mapping):
            coloring = dict(enumerate(coloring))
        for node in coloring:
            if not (0 <= int(node) < graph.n):
                raise InputError(f"coloring references unknown node {node}")
        missing = [i for i in range(graph.n) if i not in coloring]
        if missing:
            raise InputError(f"coloring does not cover nodes {missing}")
    lines = ["graph G {"]
    for i in range(graph.n):
        attrs = []
        if graph.labels is not None:
            attrs.append(f'label="{graph.labels[i]}"')
        if coloring is not None:
            attrs.append(f'style=filled, fillcolor="{_color_hex(int(coloring[i]))}"')
        lines.append(f"  {i} [{', '.join(attrs)}];" if attrs else f"  {i};")
    for i, j in graph.sorted_edges():
        lines.append(f"  {i} -- {j};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_dumps(graph: ConflictGraph) -> str:
    return json.dumps(graph.to_json(), indent=2) + "\n"


def max_overlap(schedule: FlightSchedule | Iterable[Flight]) -> int:
    """Largest number of simultaneously occupied gates (sweep over events)."""
    flights = schedule.flights if isinstance(schedule, FlightSchedule) else list(schedule)
    # departures sort before arrivals at equal times: half-open intervals
    events = sorted([(f.arrival, 1) for f in flights] + [(f.departure, -1) for f in flights])
    best = cur = 0
    for _, delta in events:
        cur += delta
        best = max(best, cur)
    return best


def generate_schedule(
    n_flights: int,
    gates: int,
    seed: int,
    horizon: int = 16 * 60,
    min_stay: int = 45,
    max_stay: int = 240,
    max_tries: int = 100_000,
) -> FlightSchedule:
    """Random schedule whose peak gate demand is exactly ``gates``.

    Rejection-samples arrival times and stays until the maximum overlap equals
    ``gates``; for interval graphs that makes the chromatic number exactly
    ``gates``. Deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    start = 6 * 60
    for _ in range(max_tries):
        arr = np.sort(rng.integers(start, start + horizon, size=n_flights))
        stay = rng.integers(min_stay, max_stay + 1, size=n_flights)
        flights = tuple(
            Flight(f"F{i + 1:02d}", int(a), int(a + s)) for i, (a, s) in enumerate(zip(arr, stay))
        )
        if max_overlap(flights) == gates:
            return FlightSchedule(flights, gates)
    raise InputError(f"no schedule with peak demand {gates} after {max_tries} tries")
