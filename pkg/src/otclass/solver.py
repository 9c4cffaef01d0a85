"""Exact linear programming for transport problems.

:func:`solve_transportation` is a network simplex on the bipartite
transportation graph. It works on float arrays or on object arrays of
``Fraction``; masses and costs may independently be exact, in which case the
corresponding comparisons are exact too. :func:`solve_lp_dense` is a small
two-phase tableau simplex for LPs without transportation structure.
"""

from __future__ import annotations

import csv
import enum
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral
from typing import Optional, TextIO

import numpy as np

from .errors import Infeasible, ModeMismatch, NegativeWeight, NumericalFailure
from .measure import EPS_MASS, _as_array, is_exact

EPS_FEAS = 1e-9
EPS_DUAL = 1e-7


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


def _vector(v) -> np.ndarray:
    if isinstance(v, np.ndarray) and v.dtype == object:
        return v.ravel()
    if any(isinstance(x, Fraction) for x in np.ravel(np.asarray(v, dtype=object))):
        return _as_array(list(np.ravel(np.asarray(v, dtype=object))), "rational")
    return np.asarray(v, dtype=float).ravel()


def _matrix(c) -> np.ndarray:
    if isinstance(c, np.ndarray) and c.dtype == object:
        return c
    arr = np.asarray(c, dtype=object)
    if any(isinstance(x, Fraction) for x in arr.ravel()):
        return _as_array(arr.tolist(), "rational")
    return np.asarray(c, dtype=float)


def _all_integral(c) -> bool:
    return all(
        isinstance(x, (Integral, Fraction)) for x in np.ravel(np.asarray(c, dtype=object))
    )


@dataclass(frozen=True, eq=False)
class TransportationInstance:
    """Supplies, demands and an ``m x n`` cost matrix with equal total mass."""

    supply: np.ndarray
    demand: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        s, d, c = _vector(self.supply), _vector(self.demand), _matrix(self.cost)
        if is_exact(s) and not is_exact(c) and _all_integral(self.cost):
            c = _as_array(np.asarray(self.cost, dtype=object).tolist(), "rational")
        if is_exact(s) != is_exact(d):
            raise ModeMismatch("supply and demand must both be exact or both float")
        if c.shape != (len(s), len(d)):
            raise ValueError(f"cost is {c.shape}, expected {(len(s), len(d))}")
        if len(s) == 0 or len(d) == 0:
            raise ValueError("empty instance")
        if np.any(s <= 0) or np.any(d <= 0):
            raise NegativeWeight("supplies and demands must be strictly positive")
        gap = s.sum() - d.sum()
        if (gap != 0) if is_exact(s) else abs(gap) > EPS_MASS:
            raise Infeasible(f"total supply and demand differ by {gap}")
        object.__setattr__(self, "supply", s)
        object.__setattr__(self, "demand", d)
        object.__setattr__(self, "cost", c)

    @property
    def shape(self):
        return self.cost.shape


@dataclass(frozen=True, eq=False)
class SolverSolution:
    plan: np.ndarray
    objective: object
    dual_row: np.ndarray
    dual_col: np.ndarray
    iterations: int
    status: Status = Status.OPTIMAL
    trace: list = field(default_factory=list, repr=False)

    def support(self, tol: float = EPS_FEAS) -> list[tuple[int, int]]:
        if is_exact(self.plan):
            return [tuple(map(int, ij)) for ij in np.argwhere(self.plan > 0)]
        return [tuple(map(int, ij)) for ij in np.argwhere(self.plan > tol)]

    def dual_objective(self, inst: TransportationInstance):
        return inst.supply @ self.dual_row + inst.demand @ self.dual_col


def write_trace(trace, fh: TextIO) -> None:
    """Dump a pivot trace as CSV (iteration, entering arc, leaving arc, objective)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["iteration", "entering", "leaving", "objective"])
    for it, enter, leave, obj in trace:
        w.writerow([it, f"{enter[0]}-{enter[1]}", f"{leave[0]}-{leave[1]}", obj])


def solve_transportation(
    inst: TransportationInstance,
    rule: str = "bland",
    trace: bool = False,
    max_iter: Optional[int] = None,
) -> SolverSolution:
    """Solve ``min <C, P>`` over couplings of ``supply`` and ``demand``.

    Parameters
    ----------
    inst : TransportationInstance
    rule : {"bland", "strong"}
        ``"bland"`` enters the lowest-index arc with negative reduced cost and
        breaks leaving ties by lowest index. ``"strong"`` enters the most
        negative arc and keeps a strongly feasible tree through lexicographic
        perturbation of the supplies, which rules out cycling.
    trace : bool
        Record ``(iteration, entering, leaving, objective)`` per pivot.
    max_iter : int, optional
        Defaults to ``50 * (m + n) ** 2``.

    Returns
    -------
    SolverSolution
        A basic optimal plan (at most ``m + n - 1`` positive entries) with
        potentials satisfying ``C - u[:, None] - v[None, :] >= 0``.
    """
    if rule not in ("bland", "strong"):
        raise ValueError(f"unknown pivot rule {rule!r}")
    return _NetworkSimplex(inst, rule, trace, max_iter).run()


class _NetworkSimplex:
    def __init__(self, inst, rule, trace, max_iter):
        self.C = inst.cost
        self.m, self.n = inst.shape
        self.exact_mass = is_exact(inst.supply)
        self.exact_cost = is_exact(self.C)
        self.rule = rule
        self.want_trace = trace
        self.max_iter = max_iter if max_iter is not None else 50 * (self.m + self.n) ** 2
        if self.exact_cost:
            self.rc_tol = 0
        else:
            scale = float(np.max(np.abs(self.C))) if self.C.size else 0.0
            self.rc_tol = 1e-11 * (1.0 + scale)
        self.zero = Fraction(0) if self.exact_mass else 0.0
        self._initial_basis(inst.supply, inst.demand)

    # flows are stored as value plus an integer coefficient of the perturbation
    # epsilon; the coefficient only steers pivoting under the "strong" rule
    def _initial_basis(self, supply, demand):
        m, n = self.m, self.n
        s = list(supply)
        d = list(demand)
        se = [1] * m
        de = [0] * n
        de[n - 1] = m
        self.flow = {}
        self.eps = {}
        i = j = 0
        while True:
            if self.rule == "strong":
                row_first = (s[i], se[i]) <= (d[j], de[j])
            else:
                row_first = s[i] <= d[j]
            if row_first:
                q, qe = s[i], se[i]
            else:
                q, qe = d[j], de[j]
            self.flow[(i, j)] = q
            self.eps[(i, j)] = qe
            s[i] -= q
            d[j] -= q
            se[i] -= qe
            de[j] -= qe
            if i == m - 1 and j == n - 1:
                break
            if i == m - 1:
                j += 1
            elif j == n - 1:
                i += 1
            elif row_first:
                i += 1
            else:
                j += 1
        if not self.exact_mass:
            self._recompute_flows(supply, demand)

    def _recompute_flows(self, supply, demand):
        """Re-derive tree flows from the marginals by leaf peeling."""
        m = self.m
        s = [float(x) for x in supply]
        d = [float(x) for x in demand]
        adj = {k: set() for k in range(m + self.n)}
        for i, j in self.flow:
            adj[i].add(m + j)
            adj[m + j].add(i)
        leaves = deque(k for k in adj if len(adj[k]) == 1)
        while leaves:
            k = leaves.popleft()
            if not adj[k]:
                continue
            (o,) = adj[k]
            if k < m:
                arc, q = (k, o - m), s[k]
                d[o - m] -= q
            else:
                arc, q = (o, k - m), d[k - m]
                s[o] -= q
            self.flow[arc] = max(q, 0.0)
            adj[o].discard(k)
            adj[k].clear()
            if len(adj[o]) == 1:
                leaves.append(o)

    def _tree(self):
        """Potentials and parent pointers of the basis tree rooted at row 0."""
        m, n = self.m, self.n
        adj = [[] for _ in range(m + n)]
        for i, j in self.flow:
            adj[i].append(m + j)
            adj[m + j].append(i)
        parent = [-1] * (m + n)
        depth = [0] * (m + n)
        pot = [None] * (m + n)
        pot[0] = self.C[0, 0] * 0
        seen = [False] * (m + n)
        seen[0] = True
        queue = deque([0])
        while queue:
            k = queue.popleft()
            for o in adj[k]:
                if seen[o]:
                    continue
                seen[o] = True
                parent[o] = k
                depth[o] = depth[k] + 1
                if k < m:
                    pot[o] = self.C[k, o - m] - pot[k]
                else:
                    pot[o] = self.C[o, k - m] - pot[k]
                queue.append(o)
        if not all(seen):
            raise NumericalFailure("basis is not a spanning tree")
        dt = object if self.exact_cost else float
        u = np.array(pot[:m], dtype=dt)
        v = np.array(pot[m:], dtype=dt)
        return u, v, parent, depth

    def _entering(self, u, v):
        rc = self.C - u[:, None] - v[None, :]
        if self.rule == "bland":
            neg = np.flatnonzero((rc < -self.rc_tol).ravel())
            if neg.size == 0:
                return None
            k = int(neg[0])
        else:
            flat = rc.ravel()
            k = int(np.argmin(flat)) if not self.exact_cost else min(
                range(flat.size), key=lambda t: (flat[t], t)
            )
            if not flat[k] < -self.rc_tol:
                return None
        return divmod(k, self.n)

    def _cycle(self, p, q, parent, depth):
        """Arcs of the pivot cycle as (arc, sign); the entering arc comes first."""
        m = self.m
        a, b = p, m + q
        up_a, up_b = [], []
        while a != b:
            if depth[a] >= depth[b]:
                up_a.append(a)
                a = parent[a]
            else:
                up_b.append(b)
                b = parent[b]
        # walk: col q -> ... -> apex -> ... -> row p, then back over (p, q)
        path = up_b + [a] + list(reversed(up_a))
        arcs = [((p, q), 1)]
        sign = -1
        for x, y in zip(path, path[1:]):
            arc = (x, y - m) if x < m else (y, x - m)
            arcs.append((arc, sign))
            sign = -sign
        return arcs

    def _key(self, arc):
        if self.rule == "strong":
            return (self.flow[arc], self.eps[arc])
        return (self.flow[arc], arc[0] * self.n + arc[1])

    def _objective(self):
        return sum((self.flow[a] * self.C[a] for a in self.flow), self.zero)

    def run(self) -> SolverSolution:
        trace = []
        it = 0
        while True:
            u, v, parent, depth = self._tree()
            enter = self._entering(u, v)
            if enter is None:
                break
            if it >= self.max_iter:
                raise NumericalFailure(
                    f"iteration cap {self.max_iter} reached", iterations=it
                )
            it += 1
            cycle = self._cycle(*enter, parent, depth)
            minus = [a for a, s in cycle if s < 0]
            leave = min(minus, key=self._key)
            theta, theta_e = self.flow[leave], self.eps[leave]
            if self.rule == "bland":
                theta_e = 0
            self.flow[enter] = self.zero
            self.eps[enter] = 0
            for arc, s in cycle:
                self.flow[arc] += s * theta
                self.eps[arc] += s * theta_e
            del self.flow[leave]
            del self.eps[leave]
            if not self.exact_mass:
                for arc, s in cycle:
                    if s < 0 and arc in self.flow and self.flow[arc] < 0:
                        self.flow[arc] = 0.0
            if self.want_trace:
                trace.append((it, enter, leave, self._objective()))

        m, n = self.m, self.n
        plan = np.zeros((m, n), dtype=object if self.exact_mass else float)
        if self.exact_mass:
            plan[:] = Fraction(0)
        for arc, x in self.flow.items():
            plan[arc] = x
        objective = self._objective()
        return SolverSolution(
            plan=plan,
            objective=objective,
            dual_row=u,
            dual_col=v,
            iterations=it,
            status=Status.OPTIMAL,
            trace=trace,
        )


# ---------------------------------------------------------------------------
# Dense simplex
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LPResult:
    status: Status
    x: Optional[np.ndarray] = None
    objective: object = None
    duals: Optional[np.ndarray] = None
    iterations: int = 0


def solve_lp_dense(objective, A_eq, b_eq, max_iter: Optional[int] = None) -> LPResult:
    """Minimize ``objective @ x`` subject to ``A_eq @ x = b_eq`` and ``x >= 0``.

    Two-phase tableau simplex with Bland's rule. All-Fraction input is solved
    exactly. Infeasible and unbounded problems are reported through
    ``status``; pivot breakdown raises :class:`NumericalFailure`.
    """
    c = _vector(objective)
    A = _matrix(np.atleast_2d(np.asarray(A_eq, dtype=object)))
    b = _vector(b_eq)
    exact = is_exact(c) and is_exact(A) and is_exact(b)
    if not exact:
        c, A, b = (np.asarray(z, dtype=float) for z in (c, A, b))
    k = len(c)
    if k > 10_000:
        raise ValueError("dense LP limited to 10^4 variables")
    if A.shape != (len(b), k):
        raise ValueError(f"constraint matrix is {A.shape}, expected {(len(b), k)}")
    r = len(b)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    tol = 0 if exact else 1e-10 * (1.0 + float(np.max(np.abs(A), initial=0.0)))
    max_iter = max_iter if max_iter is not None else 50 * (r + k) ** 2 + 100

    sign = np.array([one if bi >= 0 else -one for bi in b], dtype=A.dtype)
    A = A * sign[:, None]
    b = b * sign
    # tableau columns: k structural, r artificial, then rhs
    T = np.empty((r, k + r + 1), dtype=object if exact else float)
    T[:, :k] = A
    T[:, k : k + r] = np.identity(r, dtype=int) * one
    T[:, -1] = b
    if exact:
        T[:, k : k + r] = [[one if i == j else zero for j in range(r)] for i in range(r)]
    basis = list(range(k, k + r))
    iters = 0

    def pivot(row, col):
        T[row] = T[row] / T[row, col]
        for i in range(r):
            if i != row and T[i, col] != 0:
                T[i] = T[i] - T[i, col] * T[row]
        basis[row] = col

    def optimize(cost, allowed):
        nonlocal iters
        while True:
            cb = np.array([cost[j] for j in basis], dtype=T.dtype)
            red = cost - cb @ T[:, :-1]
            enter = next((j for j in allowed if red[j] < -tol), None)
            if enter is None:
                return Status.OPTIMAL
            if iters >= max_iter:
                raise NumericalFailure("dense simplex iteration cap reached", iters)
            iters += 1
            best = None
            for i in range(r):
                if T[i, enter] > tol:
                    ratio = T[i, -1] / T[i, enter]
                    if best is None or (ratio, basis[i]) < best[0]:
                        best = ((ratio, basis[i]), i)
            if best is None:
                return Status.UNBOUNDED
            pivot(best[1], enter)

    phase1 = np.array([zero] * k + [one] * r, dtype=T.dtype)
    optimize(phase1, range(k))
    infeas = sum((T[i, -1] for i in range(r) if basis[i] >= k), zero)
    if infeas > (0 if exact else 1e-9 * (1.0 + float(np.max(np.abs(b), initial=0.0)))):
        return LPResult(Status.INFEASIBLE, iterations=iters)
    # drive remaining artificials out of the basis; rows where that fails are redundant
    for i in range(r):
        if basis[i] >= k:
            col = next((j for j in range(k) if abs(T[i, j]) > tol), None)
            if col is not None:
                pivot(i, col)
    phase2 = np.concatenate([c, np.array([zero] * r, dtype=T.dtype)]).astype(T.dtype)
    status = optimize(phase2, range(k))
    if status is Status.UNBOUNDED:
        return LPResult(Status.UNBOUNDED, iterations=iters)
    x = np.array([zero] * k, dtype=T.dtype)
    for i, j in enumerate(basis):
        if j < k:
            x[j] = T[i, -1]
    cb = np.array([phase2[j] for j in basis], dtype=T.dtype)
    red_art = phase2[k : k + r] - cb @ T[:, k : k + r]
    duals = -red_art * sign
    return LPResult(Status.OPTIMAL, x=x, objective=c @ x, duals=duals, iterations=iters)
