import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gatevqe.errors import InputError
from gatevqe.hamiltonian import Encoding, EncodingKind, IsingHamiltonian, build_hamiltonian
from gatevqe.optim import OptimizerConfig
from gatevqe.oracle import brute_force_ground_state, verify_coloring
from gatevqe.simulator import apply_circuit, build_ansatz
from gatevqe.vqe import Mode, VqeConfig, energy_landscape, make_objective, vqe_solve

Z0 = IsingHamiltonian(1, ((1, 1.0),))


def p3_problem(path3):
    enc = Encoding(EncodingKind.BINARY, 3, 2)
    h = build_hamiltonian(path3, enc)
    return h, enc, brute_force_ground_state(h)


def test_constant_hamiltonian_flat_trace():
    res = vqe_solve(IsingHamiltonian(2, (), 2.5), cfg=VqeConfig(restarts=1, opt=OptimizerConfig(max_evals=30)))
    assert res.best_energy == pytest.approx(2.5)
    assert np.allclose(res.trace.values, 2.5)


def test_single_z_minimum():
    res = vqe_solve(Z0, cfg=VqeConfig(layers=1))
    assert res.best_energy == pytest.approx(-1, abs=1e-3)
    assert res.best_bitstring == "0"


def test_path3_exact_cobyla_seed7(path3):
    h, enc, gt = p3_problem(path3)
    res = vqe_solve(h, enc, VqeConfig(seed=7), gt)
    assert res.ground_truth_gap < 1e-3
    assert verify_coloring(path3, res.decoded, 2)


def test_path3_sampled_spsa(path3):
    h, enc, gt = p3_problem(path3)
    cfg = VqeConfig(optimizer="spsa", mode=Mode.SAMPLED, shots=1024, restarts=3, opt=OptimizerConfig(max_evals=401))
    wins = sum(verify_coloring(path3, vqe_solve(h, enc, dataclasses.replace(cfg, seed=s), gt).decoded, 2)
               for s in range(10))
    assert wins >= 8


@pytest.mark.parametrize("mode, optimizer", [("exact", "cobyla"), ("sampled", "spsa"), ("sampled", "cobyla")])
def test_seed_determinism(path3, mode, optimizer):
    h, enc, gt = p3_problem(path3)
    cfg = VqeConfig(seed=11, mode=mode, optimizer=optimizer, restarts=2, opt=OptimizerConfig(max_evals=120))
    a, b = vqe_solve(h, enc, cfg, gt), vqe_solve(h, enc, cfg, gt)
    assert a.to_json() == b.to_json()
    assert a.trace.to_csv() == b.trace.to_csv()
    assert a.final_histogram.dumps() == b.final_histogram.dumps()


def test_different_seeds_differ(path3):
    h, enc, _ = p3_problem(path3)
    cfg = dict(restarts=1, opt=OptimizerConfig(max_evals=20))
    a = vqe_solve(h, enc, VqeConfig(seed=0, **cfg))
    b = vqe_solve(h, enc, VqeConfig(seed=1, **cfg))
    assert not np.array_equal(a.trace.evaluations[0][0], b.trace.evaluations[0][0])


def test_restart_bookkeeping(path3):
    h, enc, _ = p3_problem(path3)
    res = vqe_solve(h, enc, VqeConfig(restarts=4, opt=OptimizerConfig(max_evals=40)))
    assert len(res.restart_energies) == 4
    assert res.best_energy == min(res.restart_energies) == res.restart_energies[res.best_restart]


def test_encoding_mismatch(path3):
    h, _, _ = p3_problem(path3)
    with pytest.raises(InputError):
        vqe_solve(h, Encoding(EncodingKind.BINARY, 2, 2))


def test_sampled_estimate_converges(path3):
    h, _, _ = p3_problem(path3)
    shots = 100_000
    cfg = VqeConfig(mode="sampled", shots=shots)
    theta = np.linspace(-2, 2, 9)
    _, f = make_objective(h, cfg, np.random.default_rng(0))
    exact = make_objective(h, VqeConfig())[1](theta)
    p = apply_circuit(build_ansatz(3, 2), theta).probabilities
    sigma = math.sqrt(p @ h.diagonal**2 - exact**2) / math.sqrt(shots)
    assert abs(f(theta) - exact) <= 3 * sigma


def test_landscape_single_qubit():
    grid = np.linspace(0, 2 * np.pi, 5)
    pts = energy_landscape(Z0, grid, [0.0, 0.0], index=0)
    # E(t) = -cos(t) with the closing rotation at zero
    assert [e for _, e in pts] == pytest.approx(-np.cos(grid), abs=1e-12)
    assert min(e for _, e in pts) == pytest.approx(-1) and max(e for _, e in pts) == pytest.approx(1)


def test_landscape_constant_and_single_point():
    h = IsingHamiltonian(1, (), 4.0)
    assert all(e == pytest.approx(4.0) for _, e in energy_landscape(h, [0, 1, 2], [0.0, 0.0]))
    (t, e), = energy_landscape(Z0, [0.7], [0.0, 0.3], index=0)
    assert e == pytest.approx(make_objective(Z0, VqeConfig(layers=1))[1](np.array([0.7, 0.3])))


def test_landscape_bad_index():
    with pytest.raises(InputError):
        energy_landscape(Z0, [0.0], [0.0, 0.0], index=5)


small_h = st.integers(1, 4).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.dictionaries(st.integers(1, (1 << n) - 1), st.integers(-4, 4).map(float), max_size=5),
    )
)


@settings(max_examples=25, deadline=None)
@given(small_h, st.integers(0, 1000))
def test_energies_within_spectrum_and_gap_nonnegative(data, seed):
    n, poly = data
    h = IsingHamiltonian.from_poly(n, poly)
    gt = brute_force_ground_state(h)
    res = vqe_solve(h, cfg=VqeConfig(seed=seed, layers=1, restarts=1, opt=OptimizerConfig(max_evals=60)), ground=gt)
    vals = res.trace.values
    assert np.all(vals >= gt.ground_energy - 1e-9) and np.all(vals <= gt.max_energy + 1e-9)
    assert res.ground_truth_gap >= -1e-9
