"""Randomized invariant suites behind ``otclass check``."""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from .disintegration import DisintegrationMap, classes_equal, disintegrate, recombine, second_marginal
from .kantorovich import (
    check_cyclical_monotonicity,
    check_twist,
    solve_mk,
    wasserstein,
)
from .measure import Euclidean, SquaredEuclidean, make_measure
from .meta import generalized_barycenter, meta_wasserstein
from .sampling import random_measure, random_meta
from .solver import EPS_DUAL, TransportationInstance, solve_transportation


class SuiteResult(NamedTuple):
    trials: int
    max_violation: float
    passed: bool
    witness: Optional[dict]


def _duality(rng, trials, cost):
    worst, witness = 0.0, None
    for t in range(trials):
        m, n = (int(v) for v in rng.integers(1, 21, size=2))
        a = rng.random(m) + 0.05
        b = rng.random(n) + 0.05
        a, b = a / a.sum(), b / b.sum()
        if t % 2:
            C = rng.uniform(0, 10, size=(m, n))
        else:
            X, Y = rng.normal(size=(m, 2)), rng.normal(size=(n, 2))
            C = np.linalg.norm(X[:, None] - Y[None], axis=2)
        inst = TransportationInstance(a, b, C)
        sol = solve_transportation(inst)
        gap = abs(sol.objective - sol.dual_objective(inst)) / (m + n)
        if gap > worst:
            worst = gap
            witness = {"trial": t, "m": m, "n": n, "gap": float(gap)}
    return worst, witness


def _monotonicity(rng, trials, cost):
    cost = cost or SquaredEuclidean()
    worst, witness = 0.0, None
    for t in range(trials):
        mu = random_measure(rng, int(rng.integers(1, 6)), 2, exact=False)
        nu = random_measure(rng, int(rng.integers(1, 6)), 2, exact=False)
        plan = solve_mk(cost, mu, nu).plan
        chk = check_cyclical_monotonicity(cost, plan.support_points(), 3)
        if not chk.monotone and float(chk.excess) > worst:
            worst = float(chk.excess)
            witness = {"trial": t, "cycle": list(chk.violating_cycle)}
    return worst, witness


def _barycenter_lipschitz(rng, trials, cost):
    worst, witness = -np.inf, None
    for t in range(trials):
        k1, k2, p = (int(v) for v in rng.integers(1, 6, size=3))
        N1 = random_meta(rng, k1, p, exact=False)
        N2 = random_meta(rng, k2, p, exact=False)
        lhs = float(wasserstein(1, generalized_barycenter(N1), generalized_barycenter(N2)))
        rhs = float(meta_wasserstein(N1, N2))
        excess = lhs - rhs
        if excess > worst:
            worst = excess
            witness = {"trial": t, "barycenter_distance": lhs, "meta_distance": rhs}
    return worst, witness


def _twist(rng, trials, cost):
    cost = cost or SquaredEuclidean()
    grid = rng.uniform(-3, 3, size=(trials, 2))
    pairs = []
    while len(pairs) < 3:
        y1, y2 = rng.uniform(-3, 3, size=(2, 2))
        pairs.append((tuple(y1), tuple(y2)))
    bad = check_twist(cost, [tuple(x) for x in grid], pairs)
    witness = None
    if bad:
        witness = {"point": list(grid[bad[0].point_index]), "pair": bad[0].pair_index}
    return float(len(bad)), witness


def _same_class_push(rng, trials, cost):
    worst, witness = 0.0, None
    for t in range(trials):
        m, n = int(rng.integers(2, 6)), int(rng.integers(1, 5))
        mu = make_measure(range(m), [f"1/{m}"] * m, mode="rational")
        nu = random_measure(rng, n, 1, exact=True)
        plan = solve_mk(Euclidean(1), mu, nu).plan
        f = disintegrate(plan)
        perm = rng.permutation(m)
        g = DisintegrationMap(mu, tuple(f.conditionals[k] for k in perm))
        other = recombine(g, mu)
        if not classes_equal(plan, other):
            worst, witness = 1.0, {"trial": t, "reason": "permuted map left the class"}
        elif second_marginal(plan) != second_marginal(other):
            worst, witness = 1.0, {"trial": t, "reason": "second marginals differ"}
    return worst, witness


SUITES = {
    "duality": (_duality, EPS_DUAL),
    "monotonicity": (_monotonicity, 0.0),
    "barycenter-lipschitz": (_barycenter_lipschitz, EPS_DUAL),
    "twist": (_twist, 0.0),
    "push-lemma": (_same_class_push, 0.0),
}


def run_suite(name: str, trials: int = 100, seed: int = 0, cost=None, tol=None) -> SuiteResult:
    """Run one suite; ``tol`` replaces the suite's default threshold."""
    fn, default = SUITES[name]
    tol = default if tol is None else tol
    rng = np.random.default_rng(seed)
    worst, witness = fn(rng, trials, cost)
    passed = bool(worst <= tol)
    return SuiteResult(trials, float(worst), passed, None if passed else witness)
