"""Classical ground truth: exhaustive ground states, coloring checks, DSATUR."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ResourceError
from .hamiltonian import DecodedColoring, IsingHamiltonian, index_to_bitstring
from .schedule import ConflictGraph

DEFAULT_ORACLE_CAP = 24
MAX_LISTED_STATES = 10_000
_CHUNK = 1 << 20


@dataclass(frozen=True)
class GroundTruth:
    ground_energy: float
    ground_states: tuple[str, ...]  # qubit 0 rightmost; truncated at MAX_LISTED_STATES
    n_ground_states: int
    n_enumerated: int
    max_energy: float

    @property
    def truncated(self) -> bool:
        return self.n_ground_states > len(self.ground_states)

    def to_json(self) -> dict:
        return {
            "ground_energy": self.ground_energy,
            "max_energy": self.max_energy,
            "n_ground_states": self.n_ground_states,
            "ground_states": list(self.ground_states),
            "truncated": self.truncated,
            "n_enumerated": self.n_enumerated,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def brute_force_ground_state(
    h: IsingHamiltonian,
    cap: int = DEFAULT_ORACLE_CAP,
    descending: bool = False,
    chunk: int = _CHUNK,
    max_listed: int = MAX_LISTED_STATES,
) -> GroundTruth:
    """Evaluate all ``2**n`` basis states and keep the minimum and its minimizers.

    The scan runs in chunks, in either direction; minimizers are reported in
    ascending index order whichever direction was used.
    """
    n = h.n_qubits
    if n > cap:
        raise ResourceError(f"{n} qubits exceeds the oracle cap of {cap}")
    total = 1 << n
    starts = list(range(0, total, chunk))
    if descending:
        starts.reverse()
    best = np.inf
    worst = -np.inf
    found: list[np.ndarray] = []
    count = 0
    for s in starts:
        idx = np.arange(s, min(s + chunk, total), dtype=np.int64)
        if descending:
            idx = idx[::-1]
        e = h.energies(idx)
        lo = e.min()
        worst = max(worst, float(e.max()))
        if lo < best:
            best = lo
            found, count = [], 0
        if lo == best:
            hits = idx[e == best]
            count += hits.size
            found.append(hits)
    states = np.sort(np.concatenate(found)) if found else np.array([], dtype=np.int64)
    listed = tuple(index_to_bitstring(int(i), n) for i in states[:max_listed])
    return GroundTruth(float(best), listed, count, total, worst)


def verify_coloring(graph: ConflictGraph, coloring, k: int) -> bool:
    """True iff every node has a color in ``[0, k)`` and no edge is monochromatic."""
    if isinstance(coloring, DecodedColoring):
        if not coloring.valid:
            return False
        colors = coloring.color_of
    elif isinstance(coloring, dict):
        colors = [coloring.get(i, -1) for i in range(graph.n)]
    else:
        colors = list(coloring)
    if len(colors) != graph.n:
        return False
    if any(not (0 <= c < k) for c in colors):
        return False
    return all(colors[i] != colors[j] for i, j in graph.edges)


def count_conflicts(graph: ConflictGraph, colors) -> int:
    return sum(colors[i] == colors[j] for i, j in graph.edges)


def greedy_coloring(graph: ConflictGraph) -> tuple[list[int], int]:
    """DSATUR: color the most saturated node next (ties: higher degree, lower index).

    Each node takes the smallest color unused by its neighbors.
    """
    n = graph.n
    colors = [-1] * n
    seen: list[set[int]] = [set() for _ in range(n)]
    for _ in range(n):
        v = max(
            (i for i in range(n) if colors[i] < 0),
            key=lambda i: (len(seen[i]), graph.degree(i), -i),
        )
        c = 0
        while c in seen[v]:
            c += 1
        colors[v] = c
        for u in graph.neighbors[v]:
            seen[u].add(c)
    return colors, (max(colors) + 1 if colors else 0)


def is_colorable(graph: ConflictGraph, k: int) -> bool:
    """Exact k-colorability by backtracking (small graphs)."""
    if k < 1:
        return graph.n == 0
    colors = [-1] * graph.n

    def place(v: int) -> bool:
        if v == graph.n:
            return True
        for c in range(k):
            if all(colors[u] != c for u in graph.neighbors[v]):
                colors[v] = c
                if place(v + 1):
                    return True
        colors[v] = -1
        return False

    return place(0)


def coloring_dumps(colors) -> str:
    return json.dumps({"colors": [int(c) for c in colors]}) + "\n"


def load_coloring(text: str) -> list[int]:
    try:
        return [int(c) for c in json.loads(text)["colors"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed coloring JSON: {exc}") from exc
