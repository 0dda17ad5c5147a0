"""Statevector simulation of RY/CX circuits.

Amplitude index ``b`` encodes qubit ``q`` in bit ``q`` (qubit 0 least
significant). Sampling uses numpy's Philox counter-based generator so a
(seed, shots, state) triple gives the same histogram on every platform.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError, ResourceError
from .hamiltonian import IsingHamiltonian, index_to_bitstring

DEFAULT_MAX_QUBITS = 26
MAX_QUBITS_ENV = "GATEVQE_MAX_QUBITS"


def max_qubits() -> int:
    """Statevector cap; the environment variable overrides the default."""
    raw = os.environ.get(MAX_QUBITS_ENV)
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{MAX_QUBITS_ENV}={raw!r} is not an integer") from None


def check_qubits(n: int, cap: int | None = None) -> None:
    cap = max_qubits() if cap is None else cap
    if n > cap:
        raise ResourceError(
            f"{n} qubits exceeds the statevector cap of {cap} "
            f"(2^{n} amplitudes); raise it with {MAX_QUBITS_ENV} if memory allows"
        )


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class Gate:
    name: str  # "ry" | "cx"
    qubits: tuple[int, ...]
    param: int | None = None  # parameter index for a variational RY
    angle: float | None = None  # fixed angle for a constant RY


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    ops: tuple[Gate, ...]
    n_params: int

    def __post_init__(self):
        used = set()
        for op in self.ops:
            for q in op.qubits:
                if not 0 <= q < self.n_qubits:
                    raise InputError(f"{op.name} acts on qubit {q} outside [0, {self.n_qubits})")
            if op.name == "cx" and op.qubits[0] == op.qubits[1]:
                raise InputError("cx control and target coincide")
            if op.param is not None:
                used.add(op.param)
        if used != set(range(self.n_params)):
            raise InputError("parameter indices must be contiguous from 0")

    def count(self, name: str) -> int:
        return sum(op.name == name for op in self.ops)


def build_ansatz(n_qubits: int, layers: int = 2) -> Circuit:
    """Hardware-efficient real-amplitude ansatz.

    Each layer is an RY on every qubit followed by the CX chain
    ``(0,1), (1,2), ..., (n-2,n-1)``; a closing RY layer follows the last one.
    """
    if n_qubits < 1:
        raise InputError("ansatz needs at least one qubit")
    if layers < 1:
        raise InputError("ansatz needs at least one layer")
    ops = []
    p = 0
    for _ in range(layers):
        for q in range(n_qubits):
            ops.append(Gate("ry", (q,), param=p))
            p += 1
        for q in range(n_qubits - 1):
            ops.append(Gate("cx", (q, q + 1)))
    for q in range(n_qubits):
        ops.append(Gate("ry", (q,), param=p))
        p += 1
    return Circuit(n_qubits, tuple(ops), p)


def _apply_ry(psi: np.ndarray, n: int, q: int, theta: float) -> None:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    v = psi.reshape(1 << (n - q - 1), 2, 1 << q)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = c * a0 - s * a1
    v[:, 1, :] = s * a0 + c * a1


def _apply_cx(psi: np.ndarray, n: int, control: int, target: int) -> None:
    # axis n-1-q of the reshaped tensor is qubit q
    t = psi.reshape((2,) * n)
    lo = [slice(None)] * n
    lo[n - 1 - control] = 1
    hi = list(lo)
    lo[n - 1 - target] = 0
    hi[n - 1 - target] = 1
    lo, hi = tuple(lo), tuple(hi)
    tmp = t[lo].copy()
    t[lo] = t[hi]
    t[hi] = tmp


@dataclass
class StateVector:
    amplitudes: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sum(self.probabilities))

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        psi = np.zeros(1 << n_qubits, dtype=complex)
        psi[0] = 1.0
        return cls(psi)


def apply_gate(state: StateVector, gate: Gate, theta: Sequence[float] | None = None) -> StateVector:
    """Apply one gate in place and return the state."""
    n = state.n_qubits
    if gate.name == "ry":
        angle = gate.angle if gate.param is None else float(theta[gate.param])
        _apply_ry(state.amplitudes, n, gate.qubits[0], angle)
    elif gate.name == "cx":
        _apply_cx(state.amplitudes, n, *gate.qubits)
    else:
        raise InputError(f"unsupported gate {gate.name!r}")
    return state


def apply_circuit(circuit: Circuit, theta: Sequence[float] = (), cap: int | None = None) -> StateVector:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise InputError(f"circuit has {circuit.n_params} parameters, got {theta.size}")
    check_qubits(circuit.n_qubits, cap)
    state = StateVector.zero(circuit.n_qubits)
    for op in circuit.ops:
        apply_gate(state, op, theta)
    return state


def expectation(state: StateVector, h: IsingHamiltonian) -> float:
    """Exact ``<psi|H|psi>`` for a diagonal H: probabilities dotted with the diagonal."""
    if state.amplitudes.size != 1 << h.n_qubits:
        raise InputError(f"state has {state.n_qubits} qubits, Hamiltonian {h.n_qubits}")
    return float(state.probabilities @ h.diagonal)


@dataclass(frozen=True)
class Histogram:
    counts: Mapping[str, int]
    shots: int
    n_qubits: int = field(default=0)

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise InputError("histogram counts do not sum to shots")

    def most_common(self) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_json(self) -> dict:
        return {"shots": self.shots, "counts": {k: self.counts[k] for k in sorted(self.counts)}}

    @classmethod
    def from_json(cls, data: Mapping) -> "Histogram":
        counts = {str(k): int(v) for k, v in data["counts"].items()}
        n = len(next(iter(counts))) if counts else 0
        return cls(counts, int(data["shots"]), n)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def sample_indices(
    state: StateVector, shots: int, rng: np.random.Generator, readout_flip: float = 0.0
) -> np.ndarray:
    """Counts per basis index (length ``2**n``) from a multinomial draw."""
    if shots < 1:
        raise InputError("shots must be >= 1")
    p = state.probabilities
    p = p / p.sum()
    counts = rng.multinomial(shots, p)
    if readout_flip > 0:
        n = state.n_qubits
        outcomes = np.repeat(np.arange(p.size), counts)
        flips = rng.random((shots, n)) < readout_flip
        masks = (flips.astype(np.int64) << np.arange(n)).sum(axis=1)
        counts = np.bincount(outcomes ^ masks, minlength=p.size)
    return counts


def sample(state: StateVector, shots: int, seed: int | np.random.Generator, readout_flip: float = 0.0) -> Histogram:
    """Measure every qubit ``shots`` times.

    ``readout_flip`` flips each measured bit independently with that
    probability (default 0, i.e. ideal readout).
    """
    if not 0.0 <= readout_flip <= 1.0:
        raise InputError("readout_flip must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    counts = sample_indices(state, shots, rng, readout_flip)
    n = state.n_qubits
    hist = {index_to_bitstring(int(i), n): int(counts[i]) for i in np.flatnonzero(counts)}
    return Histogram(hist, shots, n)


def logical_depth(circuit: Circuit) -> int:
    """Greedy ASAP layering: each gate lands one layer after the latest layer on its qubits."""
    level = [0] * circuit.n_qubits
    for op in circuit.ops:
        d = max(level[q] for q in op.qubits) + 1
        for q in op.qubits:
            level[q] = d
    return max(level, default=0)
