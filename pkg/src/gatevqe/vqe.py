"""Variational ground-state search: ansatz + diagonal expectation + classical optimizer."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .hamiltonian import DecodedColoring, Encoding, IsingHamiltonian, decode, eval_energy
from .optim import OptimizerConfig, OptTrace, minimize
from .oracle import GroundTruth
from .simulator import (
    Histogram,
    apply_circuit,
    build_ansatz,
    check_qubits,
    sample,
    sample_indices,
)

# stream labels mixed into each restart's seed sequence
_INIT, _SHOTS, _OPT, _FINAL = 0, 1, 2, 3


class Mode(str, enum.Enum):
    EXACT = "exact"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class VqeConfig:
    layers: int = 2
    optimizer: str = "cobyla"
    opt: OptimizerConfig = OptimizerConfig()
    mode: Mode = Mode.EXACT
    shots: int = 1024
    seed: int = 0
    restarts: int = 3
    readout_flip: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "optimizer", self.optimizer.lower())
        if self.layers < 1:
            raise InputError("layers must be >= 1")
        if self.shots < 1:
            raise InputError("shots must be >= 1")
        if self.restarts < 1:
            raise InputError("restarts must be >= 1")
        if self.optimizer not in ("spsa", "cobyla"):
            raise InputError(f"unknown optimizer {self.optimizer!r}")

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["mode"] = self.mode.value
        return d


@dataclass
class VqeResult:
    best_theta: np.ndarray
    best_energy: float
    trace: OptTrace
    final_histogram: Histogram
    best_bitstring: str
    modal_bitstring: str
    exact_energy: float
    best_bitstring_energy: float
    decoded: DecodedColoring | None = None
    ground_truth_gap: float | None = None
    best_restart: int = 0
    restart_energies: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "best_energy": self.best_energy,
            "exact_energy_at_best_theta": self.exact_energy,
            "best_theta": [float(t) for t in self.best_theta],
            "best_bitstring": self.best_bitstring,
            "best_bitstring_energy": self.best_bitstring_energy,
            "modal_bitstring": self.modal_bitstring,
            "decoded": None if self.decoded is None else self.decoded.as_dict(),
            "ground_truth_gap": self.ground_truth_gap,
            "best_restart": self.best_restart,
            "restart_energies": self.restart_energies,
            "n_evals": self.trace.n_evals,
            "optimizer_message": self.trace.message,
        }


def _seq(seed: int, restart: int, stream: int) -> np.random.SeedSequence:
    # (seed, restart) pairs never share a stream, unlike seed ^ restart
    return np.random.SeedSequence([seed, restart, stream])


def _rng(seed: int, restart: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(_seq(seed, restart, stream)))


def make_objective(h: IsingHamiltonian, cfg: VqeConfig, rng: np.random.Generator | None = None):
    """``E(theta)``: exact expectation, or the shot-averaged energy in SAMPLED mode."""
    circuit = build_ansatz(h.n_qubits, cfg.layers)
    diag = h.diagonal

    def exact(theta):
        return float(apply_circuit(circuit, theta).probabilities @ diag)

    def sampled(theta):
        counts = sample_indices(apply_circuit(circuit, theta), cfg.shots, rng, cfg.readout_flip)
        return float(counts @ diag / cfg.shots)

    if cfg.mode is Mode.EXACT:
        return circuit, exact
    if rng is None:
        raise InputError("sampled mode needs a generator")
    return circuit, sampled


def _lowest_sampled(hist: Histogram, h: IsingHamiltonian) -> str:
    return min(hist.counts, key=lambda b: (eval_energy(h, b), -hist.counts[b], b))


def vqe_solve(
    h: IsingHamiltonian,
    enc: Encoding | None = None,
    cfg: VqeConfig = VqeConfig(),
    ground: GroundTruth | None = None,
) -> VqeResult:
    """Best-of-restarts minimization of ``<psi(theta)|H|psi(theta)>``.

    Restart ``r`` draws its start uniformly from ``[-pi, pi]``; its start,
    shot noise and SPSA perturbations come from Philox streams keyed by
    ``(seed, r, purpose)``. The reported bitstring is the lowest-energy string
    in a final histogram sampled at the best parameters; ties go to the more
    frequent string, then the lexicographically smaller one.
    """
    if enc is not None and enc.n_qubits != h.n_qubits:
        raise InputError(f"encoding uses {enc.n_qubits} qubits, Hamiltonian {h.n_qubits}")
    check_qubits(h.n_qubits)

    best: tuple[float, int, OptTrace] | None = None
    energies = []
    for r in range(cfg.restarts):
        circuit, f = make_objective(h, cfg, _rng(cfg.seed, r, _SHOTS))
        theta0 = _rng(cfg.seed, r, _INIT).uniform(-math.pi, math.pi, size=circuit.n_params)
        opt_seed = int(_seq(cfg.seed, r, _OPT).generate_state(1)[0])
        trace = minimize(cfg.optimizer, f, theta0, dataclasses.replace(cfg.opt, seed=opt_seed))
        energies.append(trace.best_value)
        if best is None or trace.best_value < best[0]:
            best = (trace.best_value, r, trace)

    best_value, best_r, trace = best
    circuit = build_ansatz(h.n_qubits, cfg.layers)
    state = apply_circuit(circuit, trace.best_theta)
    exact_energy = float(state.probabilities @ h.diagonal)
    hist = sample(state, cfg.shots, _rng(cfg.seed, best_r, _FINAL), cfg.readout_flip)
    best_bits = _lowest_sampled(hist, h)
    result = VqeResult(
        best_theta=trace.best_theta,
        best_energy=best_value,
        trace=trace,
        final_histogram=hist,
        best_bitstring=best_bits,
        modal_bitstring=hist.most_common()[0][0],
        exact_energy=exact_energy,
        best_bitstring_energy=eval_energy(h, best_bits),
        decoded=None if enc is None else decode(best_bits, enc),
        ground_truth_gap=None if ground is None else best_value - ground.ground_energy,
        best_restart=best_r,
        restart_energies=energies,
    )
    return result


def energy_landscape(
    h: IsingHamiltonian,
    theta_grid: Sequence[float],
    frozen_theta: Sequence[float],
    index: int = 0,
    layers: int = 1,
) -> list[tuple[float, float]]:
    """Exact energy along one parameter with all others held at ``frozen_theta``."""
    circuit = build_ansatz(h.n_qubits, layers)
    base = np.array(frozen_theta, dtype=float)
    if base.shape != (circuit.n_params,):
        raise InputError(f"frozen_theta needs {circuit.n_params} values")
    if not 0 <= index < circuit.n_params:
        raise InputError(f"parameter index {index} out of range [0, {circuit.n_params})")
    out = []
    for t in theta_grid:
        th = base.copy()
        th[index] = t
        out.append((float(t), float(apply_circuit(circuit, th).probabilities @ h.diagonal)))
    return out
