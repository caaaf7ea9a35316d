"""Gibbs free energy and grid entropy through convex duality.

Potentials are constant on the m equal bins of [0, 1].  For such a potential
the free energy ``E[log sum_j exp(beta * tau(U_j))]`` only depends on the
multiset of bins hit by the D uniforms, so it is computed exactly by summing
over the ``C(m+D-1, D)`` multisets with multinomial weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import ContractError, SizeError
from .measures import BinnedMeasure, bin_index

logger = logging.getLogger(__name__)

MAX_MULTISETS = 10**7


@dataclass(frozen=True, eq=False)
class TauFunction:
    values: np.ndarray
    beta: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ContractError("tau needs finite values on at least one bin")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ContractError("beta must be a positive real")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def m(self) -> int:
        return int(self.values.size)

    def shifted(self, c: float) -> TauFunction:
        return TauFunction(self.values + c, self.beta)


@lru_cache(maxsize=32)
def bin_multisets(m: int, D: int) -> tuple[np.ndarray, np.ndarray]:
    """Nondecreasing D-tuples of bins and their probabilities under uniform labels."""
    count = math.comb(m + D - 1, D)
    if count > MAX_MULTISETS:
        raise SizeError(f"C(m+D-1, D) = {count} exceeds {MAX_MULTISETS}")
    rows = np.arange(m, dtype=np.int64)[:, None]
    for _ in range(D - 1):
        last = rows[:, -1]
        reps = m - last
        base = np.repeat(rows, reps, axis=0)
        start = np.repeat(last, reps)
        offs = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
        rows = np.concatenate([base, (start + offs)[:, None]], axis=1)
    # multinomial count D! / prod(multiplicity!) via run lengths
    denom = np.ones(rows.shape[0], dtype=np.int64)
    run = np.ones(rows.shape[0], dtype=np.int64)
    for j in range(1, D):
        run = np.where(rows[:, j] == rows[:, j - 1], run + 1, 1)
        denom *= run
    weights = math.factorial(D) / denom / float(m) ** D
    rows.setflags(write=False)
    weights.setflags(write=False)
    return rows, weights


def _lse_terms(tau: TauFunction, D: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows, w = bin_multisets(tau.m, D)
    x = tau.beta * tau.values[rows]
    return rows, w, x


def gibbs_exact(tau: TauFunction, D: int) -> float:
    """``E[log sum_j exp(beta * tau(U_j))]`` by exact multiset enumeration."""
    _, w, x = _lse_terms(tau, D)
    return float(np.dot(w, logsumexp(x, axis=1)))


def gibbs_mc(tau: TauFunction, D: int, N: int, seed: int) -> tuple[float, float]:
    """Sample mean and standard error of the free-energy integrand."""
    from .simulate import uniform_block

    if N < 100:
        raise ContractError("gibbs_mc needs N >= 100")
    u = uniform_block(seed, 0, 0, N * D).reshape(N, D)
    vals = logsumexp(tau.beta * tau.values[bin_index(u, tau.m)], axis=1)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(N))


def _check_nu(tau: TauFunction, nu: BinnedMeasure) -> None:
    if nu.m != tau.m:
        raise ContractError(f"resolution mismatch: tau has {tau.m} bins, nu has {nu.m}")
    if not nu.is_probability(1e-9):
        raise ContractError("nu must be a probability measure")


def dual_objective(tau: TauFunction, nu: BinnedMeasure, D: int) -> float:
    """``beta <tau, nu> - G(tau)``; its supremum over tau is minus the grid entropy."""
    _check_nu(tau, nu)
    return float(tau.beta * np.dot(tau.values, nu.weights) - gibbs_exact(tau, D))


def gibbs_gradient(tau: TauFunction, D: int) -> np.ndarray:
    """Derivative of the free energy in each bin value."""
    rows, w, x = _lse_terms(tau, D)
    soft = softmax(x, axis=1) * w[:, None]
    return tau.beta * np.bincount(rows.ravel(), weights=soft.ravel(), minlength=tau.m)


def dual_gradient(tau: TauFunction, nu: BinnedMeasure, D: int) -> np.ndarray:
    _check_nu(tau, nu)
    return tau.beta * nu.weights - gibbs_gradient(tau, D)


def _objective_and_gradient(values, beta, nu_w, D, rows, w):
    x = beta * values[rows]
    lse = logsumexp(x, axis=1)
    f = beta * float(np.dot(values, nu_w)) - float(np.dot(w, lse))
    soft = np.exp(x - lse[:, None]) * w[:, None]
    g = beta * nu_w - beta * np.bincount(rows.ravel(), weights=soft.ravel(), minlength=values.size)
    return f, g


@dataclass
class DualReport:
    entropy_estimate: float
    tau_star: TauFunction
    iterations: int
    grad_norm: float
    converged: bool
    objective_trace: list[float] = field(default_factory=list, repr=False)


def grid_entropy_dual(nu: BinnedMeasure, D: int, beta: float = 1.0, max_iter: int = 10_000,
                      tol: float = 1e-8, armijo: float = 1e-4, trace_every: int = 1) -> DualReport:
    """Upper estimate of the grid entropy of ``nu`` by maximizing the dual objective.

    Gradient ascent from ``tau = 0`` with Armijo backtracking; the trial step
    doubles after every accepted step.  ``tau`` is re-centered to mean zero
    each iteration, which does not change the objective.  The supremum is
    taken over bin-constant potentials only, so ``-objective`` never falls
    below the true entropy.  For measures on the boundary of the feasible
    set (e.g. extreme points) the supremum is approached only as ``tau``
    diverges; the run then stops at ``max_iter`` with ``converged=False``.
    """
    if not nu.is_probability(1e-9):
        raise ContractError("nu must be a probability measure")
    m = nu.m
    rows, w = bin_multisets(m, D)
    nu_w = nu.weights / nu.total
    tau = np.zeros(m)
    f, g = _objective_and_gradient(tau, beta, nu_w, D, rows, w)
    trace = [f]
    step = 1.0
    it = 0
    gnorm = float(np.linalg.norm(g))
    while it < max_iter and gnorm > tol:
        it += 1
        g2 = gnorm * gnorm
        while True:
            cand = tau + step * g
            cand -= cand.mean()
            fc, gc = _objective_and_gradient(cand, beta, nu_w, D, rows, w)
            if fc >= f + armijo * step * g2 or step < 1e-300:
                break
            step *= 0.5
        if fc < f:
            # no ascent possible at machine precision
            break
        tau, f, g = cand, fc, gc
        gnorm = float(np.linalg.norm(g))
        step *= 2.0
        if it % trace_every == 0:
            trace.append(f)
    converged = gnorm <= tol
    if not converged:
        logger.warning("dual ascent stopped after %d iterations with |grad| = %.3g", it, gnorm)
    return DualReport(-f, TauFunction(tau, beta), it, gnorm, converged, trace)


@dataclass
class ConcavityRow:
    t: float
    estimate: float
    chord: float

    @property
    def slack(self) -> float:
        return self.estimate - self.chord


def entropy_concavity_probe(nu1: BinnedMeasure, nu2: BinnedMeasure, t_list, D: int,
                            m: int | None = None, **opts) -> list[ConcavityRow]:
    """Estimate the entropy along ``t nu1 + (1-t) nu2`` and compare to the chord."""
    if nu1.m != nu2.m or (m is not None and m != nu1.m):
        raise ContractError("both measures must have the same resolution m")
    e1 = grid_entropy_dual(nu1, D, **opts).entropy_estimate
    e2 = grid_entropy_dual(nu2, D, **opts).entropy_estimate
    out = []
    for t in t_list:
        t = float(t)
        if t == 1.0:
            est = e1
        elif t == 0.0:
            est = e2
        else:
            est = grid_entropy_dual(nu1.mix(nu2, t), D, **opts).entropy_estimate
        out.append(ConcavityRow(t, est, t * e1 + (1 - t) * e2))
    return out
