import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize as scipy_minimize

from gatevqe.errors import InputError, OptimizerAbort
from gatevqe.optim import OptimizerConfig, cobyla_minimize, minimize, spsa_minimize


def quad4(x):
    return float(np.sum((x - 1.0) ** 2))


def rosen(x):
    return float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2)


# (name, f, x0) for the conformance check against an independent COBYLA
REFERENCE_PROBLEMS = [
    ("shifted quadratic 4d", quad4, np.zeros(4)),
    ("parabola 1d", lambda x: float((x[0] - 3) ** 2), np.zeros(1)),
    ("booth", lambda x: float((x[0] + 2 * x[1] - 7) ** 2 + (2 * x[0] + x[1] - 5) ** 2), np.zeros(2)),
    ("matyas", lambda x: float(0.26 * (x[0] ** 2 + x[1] ** 2) - 0.48 * x[0] * x[1]), np.array([3.0, -2.0])),
    ("ellipsoid 3d", lambda x: float(np.sum(np.arange(1, 4) * (x - 0.5) ** 2)), np.array([2.0, -1.0, 0.0])),
]


class Counter:
    def __init__(self, f):
        self.f, self.calls = f, 0

    def __call__(self, x):
        self.calls += 1
        return self.f(x)


@pytest.mark.parametrize("name, f, x0", REFERENCE_PROBLEMS, ids=[p[0] for p in REFERENCE_PROBLEMS])
def test_cobyla_agrees_with_reference(name, f, x0):
    ref = scipy_minimize(f, x0, method="COBYLA", options={"rhobeg": 0.5, "tol": 1e-8, "maxiter": 5000})
    ours = cobyla_minimize(f, x0, OptimizerConfig(max_evals=2000, rho_end=1e-6))
    assert np.linalg.norm(ours.best_theta - ref.x) < 1e-2
    assert ours.best_value <= ref.fun + 1e-4


def test_cobyla_parabola():
    tr = cobyla_minimize(lambda x: float((x[0] - 3) ** 2), [0.0])
    assert abs(tr.best_theta[0] - 3) < 1e-3


def test_cobyla_quadratic_500_evals():
    tr = cobyla_minimize(quad4, np.zeros(4), OptimizerConfig(max_evals=500))
    assert tr.best_value < 1e-4 and tr.n_evals <= 500


def test_cobyla_rosenbrock_sanity():
    tr = cobyla_minimize(rosen, [-1.2, 1.0], OptimizerConfig(max_evals=1000))
    assert tr.best_value < 1.0


def test_cobyla_stops_at_rho_end():
    tr = cobyla_minimize(quad4, np.zeros(4), OptimizerConfig(max_evals=10_000, rho_end=1e-3))
    assert tr.message == "rho_end reached" and tr.n_evals < 10_000


def test_spsa_quadratic():
    tr = spsa_minimize(quad4, np.zeros(4), OptimizerConfig(max_evals=2000, seed=1))
    assert tr.best_value < 1e-2


def test_spsa_constant_objective_never_moves():
    x0 = np.array([0.3, -0.2, 1.0])
    tr = spsa_minimize(lambda x: 2.0, x0, OptimizerConfig(max_evals=41))
    assert np.array_equal(tr.evaluations[-1][0], x0)
    assert all(np.all(g == 0) for g in tr.gradients)


@pytest.mark.parametrize("method", ["spsa", "cobyla"])
def test_fixed_seed_same_trace(method):
    cfg = OptimizerConfig(max_evals=200, seed=5)
    a = minimize(method, rosen, [-1.2, 1.0], cfg)
    b = minimize(method, rosen, [-1.2, 1.0], cfg)
    assert a.to_csv() == b.to_csv()


def test_different_seed_different_spsa_trace():
    a = spsa_minimize(quad4, np.zeros(4), OptimizerConfig(max_evals=51, seed=1))
    b = spsa_minimize(quad4, np.zeros(4), OptimizerConfig(max_evals=51, seed=2))
    assert a.to_csv() != b.to_csv()


def test_trace_csv_header():
    tr = cobyla_minimize(quad4, np.zeros(4), OptimizerConfig(max_evals=10))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "eval_index,objective,theta_0,theta_1,theta_2,theta_3"
    assert len(lines) == 11


def test_non_finite_objective_aborts():
    with pytest.raises(OptimizerAbort):
        cobyla_minimize(lambda x: math.nan, [0.0])


def test_unknown_method():
    with pytest.raises(InputError):
        minimize("nelder-mead", quad4, np.zeros(4))


def test_bad_config():
    with pytest.raises(InputError):
        OptimizerConfig(rho_begin=1e-5, rho_end=1e-4)
    with pytest.raises(InputError):
        OptimizerConfig(max_evals=0)


def test_spsa_tolerance_stops_early():
    tr = spsa_minimize(quad4, np.zeros(4), OptimizerConfig(max_evals=5000, tolerance=1e-6, patience=10))
    assert tr.message == "tolerance reached" and tr.n_evals < 5000


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["spsa", "cobyla"]), st.integers(1, 6), st.integers(1, 300), st.integers(0, 2**32 - 1))
def test_evaluation_accounting(method, dim, budget, seed):
    f = Counter(quad4)
    tr = minimize(method, f, np.zeros(dim), OptimizerConfig(max_evals=budget, seed=seed))
    assert tr.n_evals == f.calls <= budget
    best = tr.best_so_far()
    assert np.all(np.diff(best) <= 0)
    assert tr.best_value == best[-1] == f(tr.best_theta)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(3, 400))
def test_spsa_two_evaluations_per_iteration(dim, budget):
    tr = spsa_minimize(quad4, np.zeros(dim), OptimizerConfig(max_evals=budget))
    assert tr.n_evals <= 2 * tr.iterations + 1
    assert tr.n_evals == 2 * tr.iterations + 1


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 100), st.integers(0, 1000))
def test_spsa_gradient_scale_covariance(lam, seed):
    cfg = OptimizerConfig(max_evals=3, seed=seed)
    a = spsa_minimize(quad4, np.full(4, 0.2), cfg)
    b = spsa_minimize(lambda x: lam * quad4(x), np.full(4, 0.2), cfg)
    assert np.allclose(b.gradients[0], lam * a.gradients[0], rtol=1e-9)


@pytest.mark.parametrize("f", [lambda x: 2.0, lambda x: float(x[0] ** 2)], ids=["constant", "flat-directions"])
def test_cobyla_terminates_on_flat_model(f):
    tr = cobyla_minimize(f, np.zeros(3), OptimizerConfig(max_evals=10_000))
    assert tr.message == "rho_end reached" and tr.n_evals < 200
