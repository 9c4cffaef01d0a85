"""Brute-force reference computations for tests and fixture generation.

Nothing here is used by the production code paths, and nothing here reuses
their pivoting or search logic: vertices come from enumerating spanning
trees, maps from the full Cartesian product, cycles from every permutation
of every subset.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import BudgetExceeded
from .measure import DiscreteMeasure, eval_cost


@dataclass(frozen=True)
class EnumerationBudget:
    max_atoms: int = 10
    max_vertices: int = 1_000_000
    max_maps: int = 2_000_000

    def __post_init__(self):
        if min(self.max_atoms, self.max_vertices, self.max_maps) <= 0:
            raise ValueError("budgets must be positive")


DEFAULT_BUDGET = EnumerationBudget()


def _spanning_trees(m, n):
    """All spanning trees of K_{m,n}, as tuples of cells, by DFS with union-find."""
    cells = [(i, j) for i in range(m) for j in range(n)]
    need = m + n - 1

    def find(parent, a):
        while parent[a] != a:
            a = parent[a]
        return a

    def rec(start, chosen, parent):
        if len(chosen) == need:
            yield tuple(chosen)
            return
        for k in range(start, len(cells)):
            if len(cells) - k < need - len(chosen):
                return
            i, j = cells[k]
            a, b = find(parent, i), find(parent, m + j)
            if a == b:
                continue
            merged = list(parent)
            merged[a] = b
            chosen.append(cells[k])
            yield from rec(k + 1, chosen, merged)
            chosen.pop()

    yield from rec(0, [], list(range(m + n)))


def _tree_flow(tree, supply, demand):
    """Flows on a spanning tree forced by the marginals (leaf elimination)."""
    m = len(supply)
    s = list(supply)
    d = list(demand)
    incident = {k: [] for k in range(m + len(demand))}
    for i, j in tree:
        incident[i].append((i, j))
        incident[m + j].append((i, j))
    flow = {}
    remaining = set(tree)
    while remaining:
        leaf = next(k for k, arcs in incident.items() if len(arcs) == 1)
        (arc,) = incident[leaf]
        i, j = arc
        q = s[i] if leaf < m else d[j]
        flow[arc] = q
        s[i] -= q
        d[j] -= q
        incident[i].remove(arc)
        incident[m + j].remove(arc)
        remaining.discard(arc)
    return flow


def enumerate_basic_feasible(inst, budget: EnumerationBudget = DEFAULT_BUDGET):
    """All vertices of the transportation polytope with their objectives.

    Every spanning tree of the complete bipartite graph is a basis; its
    forced flow is a vertex when nonnegative. Degenerate vertices reached
    from several trees are reported once.
    """
    supply, demand, C = inst.supply, inst.demand, inst.cost
    m, n = C.shape
    if m > 5 or n > 5:
        raise BudgetExceeded("vertex enumeration limited to 5x5 instances")
    exact = supply.dtype == object
    tol = 0 if exact else -1e-12
    seen = {}
    count = 0
    for tree in _spanning_trees(m, n):
        count += 1
        if count > budget.max_vertices:
            raise BudgetExceeded(f"more than {budget.max_vertices} bases")
        flow = _tree_flow(tree, supply, demand)
        if any(q < tol for q in flow.values()):
            continue
        P = np.zeros((m, n), dtype=object if exact else float)
        if exact:
            P[:] = Fraction(0)
        for arc, q in flow.items():
            P[arc] = q if exact else max(q, 0.0)
        key = tuple(P.ravel())
        if key not in seen:
            obj = sum((P[i, j] * C[i, j] for i in range(m) for j in range(n)),
                      Fraction(0) if exact else 0.0)
            seen[key] = (P, obj)
    return list(seen.values())


def oracle_minimum(inst, budget: EnumerationBudget = DEFAULT_BUDGET):
    return min(obj for _, obj in enumerate_basic_feasible(inst, budget))


def enumerate_feasible_maps(
    mu: DiscreteMeasure, target_weights, budget: EnumerationBudget = DEFAULT_BUDGET
):
    """Every index map ``t`` whose push-forward weights equal ``target_weights``."""
    m, n = len(mu), len(target_weights)
    if m > budget.max_atoms:
        raise BudgetExceeded(f"{m} atoms exceeds budget of {budget.max_atoms}")
    if n**m > budget.max_maps:
        raise BudgetExceeded(f"{n}^{m} candidate maps exceeds budget")
    exact = mu.exact
    if exact:
        # integer weights over a common denominator keep the check exact and fast
        den = math.lcm(*(Fraction(w).denominator for w in [*mu.weights, *target_weights]))
        weights = [int(w * den) for w in mu.weights]
        targets = [Fraction(w) * den for w in target_weights]
    else:
        weights = [float(w) for w in mu.weights]
        targets = [float(w) for w in target_weights]
    out = []
    for t in itertools.product(range(n), repeat=m):
        got = [0] * n
        for i, j in enumerate(t):
            got[j] += weights[i]
        if exact:
            ok = got == targets
        else:
            ok = all(abs(g - w) <= 1e-9 * n for g, w in zip(got, targets))
        if ok:
            out.append(t)
    return out


def map_cost(C, weights, t):
    return sum(weights[i] * C[i, j] for i, j in enumerate(t))


def exhaustive_cycle_search(c, pairs, k: int, tol=None):
    """All ``(subset, permutation)`` reassignments that strictly lower the cost.

    ``subset`` is a tuple of pair indices and ``permutation`` sends position
    ``s`` of the subset to position ``permutation[s]``.
    """
    pairs = list(pairs)
    if len(pairs) > 8:
        raise BudgetExceeded("exhaustive cycle search limited to 8 pairs")
    if k > len(pairs):
        k = len(pairs)
    found = []
    for size in range(2, k + 1):
        for subset in itertools.combinations(range(len(pairs)), size):
            base = [eval_cost(c, pairs[a][0], pairs[a][1]) for a in subset]
            exact = all(isinstance(v, (Fraction, int)) for v in base)
            eps = tol if tol is not None else (0 if exact else 1e-7)
            for perm in itertools.permutations(range(size)):
                moved = sum(
                    eval_cost(c, pairs[subset[s]][0], pairs[subset[perm[s]]][1])
                    for s in range(size)
                )
                if sum(base) - moved > eps:
                    found.append((subset, perm))
    return found


# ---------------------------------------------------------------------------
# Golden fixtures
# ---------------------------------------------------------------------------


def _enc(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (np.integer, int)):
        return int(v)
    return float(v)


def write_fixture(root, derived_example_id: str, instance: dict, oracle_result) -> Path:
    """Store ``{instance, oracle_result, derived_example_id}`` under ``root``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    path = root / f"{derived_example_id}.json"
    record = {
        "derived_example_id": derived_example_id,
        "instance": instance,
        "oracle_result": oracle_result,
    }
    path.write_text(json.dumps(record, indent=2, default=_enc) + "\n")
    return path


def read_fixture(path) -> dict:
    return json.loads(Path(path).read_text())
