"""Quadratic assignment model of plane-to-gate parking and its QUBO form.

Planes ``i`` are assigned gates ``k``; the cost of a complete assignment is
``sum_{i,j} flow[i, j] * distance[gate(i), gate(j)]``. Time conflicts between
planes become "not the same gate" constraints, derived from the arrival
instants of the schedule (the only times at which the set of planes on the
ground can grow).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InfeasibleError, InputError, ResourceError
from .schedule import FlightSchedule

UNASSIGNED = -1
BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class QapInstance:
    """Flow/distance data plus gate restrictions and time conflicts.

    ``time_conflicts=None`` means no timing information is available; every
    pair of planes then competes for a gate (at most one plane per gate).
    An explicit set, possibly empty, lists exactly the pairs that overlap.
    """

    flow: np.ndarray
    distance: np.ndarray
    gate_allowed: np.ndarray | None = None
    time_conflicts: frozenset[tuple[int, int]] | None = None

    def __post_init__(self):
        flow = np.asarray(self.flow, dtype=float)
        dist = np.asarray(self.distance, dtype=float)
        if flow.ndim != 2 or flow.shape[0] != flow.shape[1]:
            raise InputError("flow must be a square matrix")
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise InputError("distance must be a square matrix")
        if (flow < 0).any() or (dist < 0).any():
            raise InputError("flow and distance entries must be nonnegative")
        if not np.allclose(dist, dist.T):
            raise InputError("distance must be symmetric")
        if np.any(np.diag(dist) != 0):
            raise InputError("distance must have a zero diagonal")
        object.__setattr__(self, "flow", flow)
        object.__setattr__(self, "distance", dist)
        if self.gate_allowed is not None:
            mask = np.asarray(self.gate_allowed, dtype=bool)
            if mask.shape != (flow.shape[0], dist.shape[0]):
                raise InputError(f"gate_allowed must have shape {(flow.shape[0], dist.shape[0])}")
            object.__setattr__(self, "gate_allowed", mask)
        if self.time_conflicts is not None:
            pairs = set()
            for i, j in self.time_conflicts:
                i, j = int(i), int(j)
                if i == j or not (0 <= i < self.n_planes and 0 <= j < self.n_planes):
                    raise InputError(f"bad conflict pair ({i}, {j})")
                pairs.add((min(i, j), max(i, j)))
            object.__setattr__(self, "time_conflicts", frozenset(pairs))

    @property
    def n_planes(self) -> int:
        return self.flow.shape[0]

    @property
    def n_gates(self) -> int:
        return self.distance.shape[0]

    def conflict_pairs(self) -> list[tuple[int, int]]:
        if self.time_conflicts is None:
            return list(itertools.combinations(range(self.n_planes), 2))
        return sorted(self.time_conflicts)

    def to_json(self) -> dict:
        return {
            "flow": self.flow.tolist(),
            "distance": self.distance.tolist(),
            "gate_allowed": None if self.gate_allowed is None else self.gate_allowed.tolist(),
            "conflicts": None if self.time_conflicts is None else [list(p) for p in sorted(self.time_conflicts)],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "QapInstance":
        try:
            conflicts = data.get("conflicts")
            return cls(
                np.array(data["flow"], dtype=float),
                np.array(data["distance"], dtype=float),
                None if data.get("gate_allowed") is None else np.array(data["gate_allowed"], dtype=bool),
                None if conflicts is None else frozenset(tuple(p) for p in conflicts),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed QAP instance JSON: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "QapInstance":
        return cls.from_json(json.loads(text))


@dataclass(frozen=True)
class Violation:
    kind: str  # "unassigned" | "bad-gate" | "gate-restriction" | "time-conflict" | "gate-occupancy"
    planes: tuple[int, ...]
    gate: int | None = None


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.feasible

    def count(self, kind: str) -> int:
        return sum(v.kind == kind for v in self.violations)


def event_time_conflicts(schedule: FlightSchedule) -> frozenset[tuple[int, int]]:
    """Conflict pairs from the per-time gate constraints, checked only at arrivals.

    ``P_t`` is the set of planes on the ground at time ``t``; any two planes in
    the same ``P_t`` may not share a gate. Restricting ``t`` to arrival
    instants loses nothing: two half-open intervals intersect iff one
    contains the other's arrival.
    """
    fl = schedule.flights
    pairs = set()
    for t in sorted({f.arrival for f in fl}):
        on_ground = [i for i, f in enumerate(fl) if f.arrival <= t < f.departure]
        pairs.update(itertools.combinations(on_ground, 2))
    return frozenset(pairs)


def _as_gates(inst: QapInstance, assignment) -> np.ndarray:
    a = np.asarray(assignment, dtype=int)
    if a.shape != (inst.n_planes,):
        raise InputError(f"assignment must have length {inst.n_planes}, got shape {a.shape}")
    return a


def qap_objective(inst: QapInstance, assignment: Sequence[int]) -> float:
    """Total passenger walking cost of a complete assignment."""
    a = _as_gates(inst, assignment)
    if (a == UNASSIGNED).any():
        raise InputError(f"incomplete assignment: planes {np.flatnonzero(a == UNASSIGNED).tolist()} have no gate")
    if (a < 0).any() or (a >= inst.n_gates).any():
        raise InputError(f"gate index out of range [0, {inst.n_gates})")
    return float(np.sum(inst.flow * inst.distance[np.ix_(a, a)]))


def check_feasible(inst: QapInstance, assignment: Sequence[int], strict: bool = False) -> FeasibilityReport:
    """List every constraint the assignment breaks.

    With ``strict=True`` every gate must also hold exactly one plane (square
    instances only); by default a gate may stay empty.
    """
    a = _as_gates(inst, assignment)
    out = []
    for i, g in enumerate(a):
        if g == UNASSIGNED:
            out.append(Violation("unassigned", (i,)))
        elif not (0 <= g < inst.n_gates):
            out.append(Violation("bad-gate", (i,), int(g)))
        elif inst.gate_allowed is not None and not inst.gate_allowed[i, g]:
            out.append(Violation("gate-restriction", (i,), int(g)))
    for i, j in inst.conflict_pairs():
        if a[i] != UNASSIGNED and a[i] == a[j] and 0 <= a[i] < inst.n_gates:
            out.append(Violation("time-conflict", (i, j), int(a[i])))
    if strict:
        if inst.n_planes != inst.n_gates:
            raise InputError("strict mode needs as many planes as gates")
        for g in range(inst.n_gates):
            planes = tuple(int(i) for i in np.flatnonzero(a == g))
            if len(planes) != 1:
                out.append(Violation("gate-occupancy", planes, g))
    return FeasibilityReport(tuple(out))


def brute_force_qap(inst: QapInstance, limit: int = BRUTE_FORCE_LIMIT) -> tuple[np.ndarray, float]:
    """Exhaustive search over all ``n_gates ** n_planes`` assignments.

    Candidates are visited in lexicographic order and only a strictly better
    objective replaces the incumbent, so ties resolve to the lexicographically
    smallest assignment.
    """
    P, G = inst.n_planes, inst.n_gates
    if G**P > limit:
        raise ResourceError(f"{G}^{P} = {G**P} assignments exceeds the brute-force limit {limit}")
    pairs = inst.conflict_pairs()
    allowed = inst.gate_allowed
    best, best_val = None, np.inf
    for cand in itertools.product(range(G), repeat=P):
        if allowed is not None and not all(allowed[i, g] for i, g in enumerate(cand)):
            continue
        if any(cand[i] == cand[j] for i, j in pairs):
            continue
        val = qap_objective(inst, cand)
        if val < best_val:
            best, best_val = cand, val
    if best is None:
        raise InfeasibleError("no feasible assignment exists")
    return np.array(best, dtype=int), float(best_val)


def default_penalty(inst: QapInstance) -> float:
    """``1 + sum(flow) * max(distance)``: exceeds any objective gain from a violation."""
    return 1.0 + float(inst.flow.sum()) * float(inst.distance.max(initial=0.0))


@dataclass(frozen=True)
class QuboProblem:
    """Minimize ``x^T Q x + g^T x + c`` over ``x`` in ``{0,1}^n``.

    ``Q`` is upper triangular: the diagonal holds linear weights (``x_i^2 = x_i``)
    and ``Q[i, j]`` for ``i < j`` the pairwise weights.
    """

    Q: np.ndarray
    g: np.ndarray
    c: float = 0.0
    penalty: float = 0.0

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise InputError("Q must be square")
        if np.any(np.tril(Q, -1) != 0):
            raise InputError("Q must be stored upper-triangular")
        g = np.zeros(Q.shape[0]) if self.g is None else np.asarray(self.g, dtype=float)
        if g.shape != (Q.shape[0],):
            raise InputError("g must match Q's dimension")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "c", float(self.c))

    @property
    def n_vars(self) -> int:
        return self.Q.shape[0]

    @classmethod
    def from_dense(cls, M, g=None, c=0.0, penalty=0.0) -> "QuboProblem":
        """Fold an arbitrary square matrix into upper-triangular storage."""
        M = np.asarray(M, dtype=float)
        U = np.triu(M) + np.triu(M.T, 1)
        return cls(U, g, c, penalty)

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,):
            raise InputError(f"expected {self.n_vars} binary values")
        return float(x @ self.Q @ x + self.g @ x + self.c)

    def evaluate_all(self) -> np.ndarray:
        """Values at every 0/1 vector; index bit ``i`` is ``x_i``."""
        n = self.n_vars
        idx = np.arange(1 << n, dtype=np.int64)
        X = ((idx[:, None] >> np.arange(n)) & 1).astype(float)
        return np.einsum("bi,ij,bj->b", X, self.Q, X) + X @ self.g + self.c


class _QuboBuilder:
    def __init__(self, n: int):
        self.Q = np.zeros((n, n))
        self.g = np.zeros(n)
        self.c = 0.0

    def add(self, a: int, b: int, w: float):
        """Add ``w * x_a * x_b``."""
        if a == b:
            self.Q[a, a] += w
        else:
            self.Q[min(a, b), max(a, b)] += w

    def one_hot_penalty(self, vars_: Sequence[int], p: float):
        """``p * (1 - sum x)^2`` expanded with ``x^2 = x``."""
        self.c += p
        for v in vars_:
            self.Q[v, v] -= p
        for a, b in itertools.combinations(vars_, 2):
            self.add(a, b, 2 * p)

    def build(self, penalty: float) -> QuboProblem:
        return QuboProblem(self.Q, self.g, self.c, penalty)


def qap_to_qubo(inst: QapInstance, penalty: float | None = None) -> QuboProblem:
    """QUBO over ``x[i * n_gates + k]`` = plane i parked at gate k.

    Value = flow/distance cost + penalty * (one gate per plane) + penalty *
    (conflicting planes on the same gate). Forbidden plane/gate pairs get a
    linear ``penalty * x_ik`` term.
    """
    if penalty is None:
        penalty = default_penalty(inst)
    if not penalty > 0:
        raise InputError(f"penalty must be positive, got {penalty}")
    P, G = inst.n_planes, inst.n_gates
    var = lambda i, k: i * G + k  # noqa: E731
    b = _QuboBuilder(P * G)
    for i, j in zip(*np.nonzero(inst.flow)):
        for k in range(G):
            for l in range(G):
                w = inst.flow[i, j] * inst.distance[k, l]
                if w:
                    b.add(var(i, k), var(j, l), w)
    for i in range(P):
        b.one_hot_penalty([var(i, k) for k in range(G)], penalty)
    for i, j in inst.conflict_pairs():
        for k in range(G):
            b.add(var(i, k), var(j, k), penalty)
    if inst.gate_allowed is not None:
        for i, k in zip(*np.nonzero(~inst.gate_allowed)):
            b.add(var(i, k), var(i, k), penalty)
    return b.build(penalty)


def assignment_to_bits(inst: QapInstance, assignment: Sequence[int]) -> np.ndarray:
    x = np.zeros(inst.n_planes * inst.n_gates, dtype=int)
    for i, g in enumerate(assignment):
        if g != UNASSIGNED:
            x[i * inst.n_gates + g] = 1
    return x


def bits_to_assignment(inst: QapInstance, x: Iterable[int]) -> np.ndarray:
    """Decode one-hot blocks; planes with zero or several gates are UNASSIGNED."""
    X = np.asarray(list(x), dtype=int).reshape(inst.n_planes, inst.n_gates)
    out = np.full(inst.n_planes, UNASSIGNED)
    ok = X.sum(axis=1) == 1
    out[ok] = X[ok].argmax(axis=1)
    return out
