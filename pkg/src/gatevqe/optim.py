"""Derivative-free minimizers for the variational loop: SPSA and COBYLA.

Both take a scalar objective ``f(theta)`` and record every evaluation in an
:class:`OptTrace`, so convergence curves can be written out directly.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, OptimizerAbort

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by both optimizers.

    SPSA gains follow ``a_k = a / (A + k + 1)**alpha`` and
    ``c_k = c / (k + 1)**gamma``. With ``a=None`` the gain is calibrated on the
    first nonzero gradient estimate so that step moves the largest
    parameter by ``target_step``; with ``A=None`` it is 10% of the iteration
    budget. ``tolerance > 0`` stops SPSA once the best value improved by less
    than that over the last ``patience`` iterations.
    """

    max_evals: int = 1000
    seed: int = 0
    a: float | None = None
    c: float = 0.1
    A: float | None = None
    alpha: float = 0.602
    gamma: float = 0.101
    target_step: float = 0.1
    rho_begin: float = 0.5
    rho_end: float = 1e-4
    tolerance: float = 0.0
    patience: int = 25

    def __post_init__(self):
        if self.max_evals < 1:
            raise InputError("max_evals must be >= 1")
        if not self.c > 0:
            raise InputError("SPSA c must be > 0")
        if self.a is not None and not self.a > 0:
            raise InputError("SPSA a must be > 0")
        if not 0 < self.rho_end < self.rho_begin:
            raise InputError("need 0 < rho_end < rho_begin")
        if self.tolerance < 0:
            raise InputError("tolerance must be >= 0")


@dataclass
class OptTrace:
    evaluations: list[tuple[np.ndarray, float]] = field(default_factory=list)
    best_theta: np.ndarray | None = None
    best_value: float = math.inf
    gradients: list[np.ndarray] = field(default_factory=list)
    iterations: int = 0
    message: str = ""

    @property
    def n_evals(self) -> int:
        return len(self.evaluations)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.evaluations])

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.values) if self.evaluations else np.array([])

    def to_csv(self) -> str:
        out = io.StringIO()
        d = len(self.evaluations[0][0]) if self.evaluations else 0
        out.write(",".join(["eval_index", "objective"] + [f"theta_{i}" for i in range(d)]) + "\n")
        for k, (th, v) in enumerate(self.evaluations):
            out.write(",".join([str(k), repr(float(v))] + [repr(float(t)) for t in th]) + "\n")
        return out.getvalue()


class _Budget(Exception):
    pass


class _Counted:
    """Objective wrapper that enforces the budget and keeps the trace."""

    def __init__(self, f: Objective, max_evals: int, trace: OptTrace):
        self.f = f
        self.max_evals = max_evals
        self.trace = trace

    @property
    def remaining(self) -> int:
        return self.max_evals - self.trace.n_evals

    def __call__(self, theta: np.ndarray) -> float:
        if self.trace.n_evals >= self.max_evals:
            raise _Budget
        theta = np.array(theta, dtype=float)
        value = float(self.f(theta))
        if not math.isfinite(value):
            raise OptimizerAbort(f"objective returned {value} at evaluation {self.trace.n_evals}")
        self.trace.evaluations.append((theta, value))
        if value < self.trace.best_value:
            self.trace.best_value = value
            self.trace.best_theta = theta
        return value


def _check_start(theta0) -> np.ndarray:
    x = np.array(theta0, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise InputError("initial point must be finite")
    return x


def spsa_minimize(f: Objective, theta0, cfg: OptimizerConfig = OptimizerConfig()) -> OptTrace:
    """Simultaneous perturbation stochastic approximation.

    Every iteration spends exactly two evaluations, at ``theta +/- c_k * delta``
    with a Rademacher ``delta``, whatever the dimension. One last evaluation at
    the final iterate closes the run.
    """
    theta = _check_start(theta0)
    trace = OptTrace()
    F = _Counted(f, cfg.max_evals, trace)
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    max_iters = (cfg.max_evals - 1) // 2
    A = 0.1 * max_iters if cfg.A is None else cfg.A
    a = cfg.a
    best_hist = []
    trace.message = "max_evals reached"
    for k in range(max_iters):
        ck = cfg.c / (k + 1) ** cfg.gamma
        delta = rng.integers(0, 2, size=theta.size) * 2 - 1
        fp = F(theta + ck * delta)
        fm = F(theta - ck * delta)
        ghat = (fp - fm) / (2 * ck * delta)
        trace.gradients.append(ghat)
        trace.iterations = k + 1
        if a is None:
            gmax = np.max(np.abs(ghat))
            if gmax > 0:
                a = cfg.target_step * (A + 1) ** cfg.alpha / gmax
        if a is not None:
            theta = theta - a / (A + k + 1) ** cfg.alpha * ghat
        best_hist.append(trace.best_value)
        if cfg.tolerance > 0 and k >= cfg.patience:
            if best_hist[k - cfg.patience] - trace.best_value < cfg.tolerance:
                trace.message = "tolerance reached"
                break
    F(theta)
    return trace


# geometry constants of the original method
_SIG = 0.25   # minimum vertex distance from the opposite face, in units of rho
_ETA = 2.1    # maximum edge length, in units of rho
_GEO = 0.5    # length of a geometry-improving step, in units of rho
_ACCEPT = 0.1  # minimum actual/predicted reduction to keep rho
_EDGE = 1.1   # vertices farther than this (units of rho) are preferred for replacement


def _vertex_to_drop(d, sim, simi, veta, vsig, rho, improved: bool):
    """Index (among non-pivot vertices) the trial point should replace, or None.

    An improving point always enters the simplex. A non-improving one only
    enters when it enlarges the simplex volume (barycentric weight above 1).
    Among vertices whose replacement keeps the simplex well shaped, a far
    away one is preferred.
    """
    lam = np.abs(d @ simi)
    drop, best = None, (0.0 if improved else 1.0)
    for j, w in enumerate(lam):
        if w > best:
            drop, best = j, w
    sigbar = lam * vsig
    edge = _EDGE * rho
    far = None
    for j in range(len(lam)):
        if sigbar[j] >= _SIG * rho or sigbar[j] >= vsig[j]:
            t = float(np.linalg.norm(d - sim[j])) if improved else veta[j]
            if t > edge:
                far, edge = j, t
    return far if far is not None else drop


def cobyla_minimize(f: Objective, theta0, cfg: OptimizerConfig = OptimizerConfig()) -> OptTrace:
    """Unconstrained COBYLA: linear models on a simplex inside a trust region.

    The ``n + 1`` simplex vertices interpolate ``f`` with a linear model.
    While the simplex is well shaped, a step of length ``delta`` goes down the
    model gradient from the best vertex. When the shape degrades (an edge
    longer than ``2.1 delta`` or a vertex closer than ``0.25 delta`` to its
    opposite face) one vertex is moved instead.

    Two radii are kept: the trust radius ``delta`` shrinks on poor steps and
    doubles on very good ones, while the resolution ``rho`` (a floor for
    ``delta``) only decreases, from ``rho_begin`` to ``rho_end``. The run ends
    when a step fails at ``delta == rho == rho_end`` on a well-shaped simplex.
    """
    x0 = _check_start(theta0)
    n = x0.size
    trace = OptTrace()
    F = _Counted(f, cfg.max_evals, trace)
    rho = delta = cfg.rho_begin
    try:
        pts = np.vstack([x0, x0 + rho * np.eye(n)])
        vals = np.empty(n + 1)
        vals[0] = F(pts[0])
        for j in range(1, n + 1):
            # each new vertex steps from the best point so far
            best = int(np.argmin(vals[:j]))
            pts[j] = pts[best] + rho * np.eye(n)[j - 1]
            vals[j] = F(pts[j])
        geometry_last = False
        while True:
            trace.iterations += 1
            piv = int(np.argmin(vals))
            others = [j for j in range(n + 1) if j != piv]
            x, fx = pts[piv], vals[piv]
            sim = pts[others] - x
            try:
                simi = np.linalg.inv(sim)
            except np.linalg.LinAlgError:
                simi = np.linalg.pinv(sim)
            g = simi @ (vals[others] - fx)
            veta = np.linalg.norm(sim, axis=1)
            vsig = 1.0 / np.maximum(np.linalg.norm(simi, axis=0), 1e-300)
            acceptable = bool(np.all(veta <= _ETA * delta) and np.all(vsig >= _SIG * delta))

            if not acceptable and not geometry_last:
                if veta.max() > _ETA * delta:
                    j = int(np.argmax(veta))
                else:
                    j = int(np.argmin(vsig))
                d = simi[:, j]
                d = _GEO * delta * d / np.linalg.norm(d)
                if g @ d > 0:
                    d = -d
                target = others[j]
                pts[target] = x + d
                vals[target] = F(pts[target])
                geometry_last = True
                continue
            geometry_last = False

            gnorm = float(np.linalg.norm(g))
            ratio = -math.inf
            old_delta = delta
            if gnorm > 0 and math.isfinite(gnorm):
                d = -delta * g / gnorm
                xn = x + d
                fn = F(xn)
                actual = fx - fn
                ratio = actual / (delta * gnorm)
                drop = _vertex_to_drop(d, sim, simi, veta, vsig, delta, improved=actual > 0)
                if drop is not None:
                    pts[others[drop]], vals[others[drop]] = xn, fn
                if ratio > 0.7:
                    delta = 2.0 * delta
                elif ratio <= _ACCEPT:
                    delta = 0.5 * delta
                    if delta <= 1.5 * rho:
                        delta = rho
            else:
                # flat model: nothing to gain at this radius
                delta = rho
            if ratio > _ACCEPT:
                continue
            if not acceptable or old_delta > rho:
                continue
            if rho <= cfg.rho_end:
                trace.message = "rho_end reached"
                break
            rho *= 0.5
            if rho <= 1.5 * cfg.rho_end:
                rho = cfg.rho_end
            delta = max(0.5 * delta, rho)
    except _Budget:
        trace.message = "max_evals reached"
    return trace


OPTIMIZERS = {"spsa": spsa_minimize, "cobyla": cobyla_minimize}


def minimize(method: str, f: Objective, theta0, cfg: OptimizerConfig = OptimizerConfig()) -> OptTrace:
    try:
        fn = OPTIMIZERS[method.lower()]
    except KeyError:
        raise InputError(f"unknown optimizer {method!r}; choose from {sorted(OPTIMIZERS)}") from None
    return fn(f, theta0, cfg)
