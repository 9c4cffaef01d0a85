"""Kantorovich and Monge problems between discrete measures.

Everything here is layered on :mod:`otclass.solver`: optimal plans and
their potentials, Wasserstein distances, exhaustive Monge search over index
maps, c-transforms, c-superdifferentials, cyclical monotonicity and the
twist condition.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NonDifferentiableCost,
    SizeLimitExceeded,
    SupportMismatch,
)
from .measure import (
    EPS_MASS,
    CostSpec,
    DiscreteMeasure,
    Euclidean,
    ExplicitMatrix,
    _as_array,
    _coerce_points,
    check_same_mode,
    cost_matrix,
    eval_cost,
    is_exact,
    locate,
    make_measure,
    union_support,
)
from .solver import (
    EPS_DUAL,
    EPS_FEAS,
    SolverSolution,
    TransportationInstance,
    solve_transportation,
)

EPS_TWIST = 1e-6
MONGE_EXHAUSTIVE_MAX = 8
MONGE_MAX = 12


# ---------------------------------------------------------------------------
# Plans and potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """A coupling of ``source`` and ``target``.

    ``matrix[i, j]`` is the mass moved from the i-th to the j-th canonical
    atom. Construction checks both marginals.
    """

    source: DiscreteMeasure
    target: DiscreteMeasure
    matrix: np.ndarray

    def __post_init__(self):
        check_same_mode(self.source, self.target)
        M = np.array(self.matrix, dtype=object if self.source.exact else float)
        if self.source.exact:
            from .measure import to_fraction

            M = np.vectorize(to_fraction, otypes=[object])(M) if M.size else M
        shape = (len(self.source), len(self.target))
        if M.shape != shape:
            raise DimensionMismatch(f"plan matrix is {M.shape}, expected {shape}")
        tol = 0 if self.source.exact else EPS_FEAS
        if np.any(M < -tol):
            raise ValueError("plan has negative entries")
        if not self.source.exact:
            M = np.where(M < 0, 0.0, M)
        rows = M.sum(axis=1) - self.source.weights
        cols = M.sum(axis=0) - self.target.weights
        if self.source.exact:
            bad = any(r != 0 for r in rows) or any(c != 0 for c in cols)
        else:
            bad = np.max(np.abs(rows)) > EPS_FEAS or np.max(np.abs(cols)) > EPS_FEAS
        if bad:
            raise ValueError("plan marginals do not match source and target")
        M.flags.writeable = False
        object.__setattr__(self, "matrix", M)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def exact(self) -> bool:
        return self.source.exact

    def support(self) -> list[tuple[int, int]]:
        tol = 0 if self.exact else EPS_FEAS
        return [tuple(map(int, ij)) for ij in np.argwhere(self.matrix > tol)]

    def support_points(self) -> list[tuple[tuple, tuple]]:
        return [(self.source.atom(i), self.target.atom(j)) for i, j in self.support()]

    def cost(self, c: CostSpec):
        """``sum_ij P_ij c(x_i, y_j)``."""
        C = cost_matrix(c, self.source, self.target)
        return _dot(self.matrix, C)

    def __eq__(self, other):
        if not isinstance(other, TransportPlan):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and np.array_equal(self.matrix, other.matrix)
        )

    __hash__ = None


def _dot(P, C):
    zero = Fraction(0) if is_exact(P) else 0.0
    return sum((p * c for p, c in zip(P.ravel(), C.ravel()) if p != 0), zero)


def make_plan(source_points, target_points, matrix, mode: str = "float") -> TransportPlan:
    """Plan from raw points and a mass matrix; both marginals are read off it.

    Rows and columns are permuted into canonical atom order, atoms that merge
    under canonicalization have their rows or columns summed, and empty rows
    or columns are dropped.
    """
    M = _as_array(np.asarray(matrix, dtype=object).tolist(), mode)
    if M.ndim != 2 or M.shape != (len(source_points), len(target_points)):
        raise DimensionMismatch("matrix shape must be (#source points, #target points)")
    rows, cols = M.sum(axis=1), M.sum(axis=0)
    src = make_measure(source_points, rows, mode=mode, normalize=(mode == "float"))
    tgt = make_measure(target_points, cols, mode=mode, normalize=(mode == "float"))
    src_pts = _coerce_points(source_points)
    tgt_pts = _coerce_points(target_points)
    out = np.zeros((len(src), len(tgt)), dtype=M.dtype)
    if mode == "rational":
        out[:] = Fraction(0)
    for i, p in enumerate(src_pts):
        a = locate(src.points, p)
        for j, q in enumerate(tgt_pts):
            if M[i, j] != 0:
                out[a, locate(tgt.points, q)] += M[i, j]
    return TransportPlan(src, tgt, out)


def product_plan(mu: DiscreteMeasure, nu: DiscreteMeasure) -> TransportPlan:
    """The independent coupling ``mu (x) nu``."""
    return TransportPlan(mu, nu, np.outer(mu.weights, nu.weights))


def map_plan(mu: DiscreteMeasure, nu: DiscreteMeasure, t: Sequence[int]) -> TransportPlan:
    """``(Id x t)_# mu`` for an index map ``t`` into the atoms of ``nu``."""
    M = np.zeros((len(mu), len(nu)), dtype=object if mu.exact else float)
    if mu.exact:
        M[:] = Fraction(0)
    for i, j in enumerate(t):
        M[i, j] += mu.weights[i]
    return TransportPlan(mu, nu, M)


@dataclass(frozen=True, eq=False)
class Potential:
    """Real values attached to the atoms of a support.

    ``metric_lip1`` records that the potential was built to be 1-Lipschitz for
    the Euclidean distance on its support.
    """

    support: np.ndarray
    values: np.ndarray
    metric_lip1: bool = False

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype != object and not np.all(np.isfinite(v)):
            raise ValueError("potential values must be finite")
        if len(v) != len(self.support):
            raise DimensionMismatch("one value per support atom is required")

    def __call__(self, point):
        k = locate(np.asarray(self.support), point)
        if k < 0:
            raise SupportMismatch(f"{point} is not in the potential's support")
        return self.values[k]

    def to_json(self) -> str:
        return json.dumps([_json_num(v) for v in self.values])


def _json_num(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return float(v)


class MKResult(NamedTuple):
    plan: TransportPlan
    value: object
    source_potential: Potential
    target_potential: Potential
    solution: SolverSolution


def solve_mk(
    c: CostSpec, mu: DiscreteMeasure, nu: DiscreteMeasure, rule: str = "bland"
) -> MKResult:
    """Optimal plan, value and dual potentials of the Kantorovich problem.

    The potentials ``u`` (on ``mu``) and ``v`` (on ``nu``) satisfy
    ``u_i + v_j <= c(x_i, y_j)`` with equality on the support of the plan.
    """
    check_same_mode(mu, nu)
    C = cost_matrix(c, mu, nu)
    inst = TransportationInstance(mu.weights, nu.weights, C)
    sol = solve_transportation(inst, rule=rule)
    plan = TransportPlan(mu, nu, sol.plan)
    return MKResult(
        plan,
        sol.objective,
        Potential(mu.points, sol.dual_row),
        Potential(nu.points, sol.dual_col),
        sol,
    )


def wasserstein(p: float, mu: DiscreteMeasure, nu: DiscreteMeasure):
    """``W_p(mu, nu)``; exact for rational measures when ``p = 1`` on the line."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"measures live in R^{mu.dim} and R^{nu.dim}")
    value = solve_mk(Euclidean(p), mu, nu).value
    if p == 1:
        return value
    return max(float(value), 0.0) ** (1.0 / p)


def lipschitz_potential(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Potential:
    """A 1-Lipschitz ``phi`` on the union of supports attaining ``W_1``.

    Built from the optimal target potential ``v`` as
    ``phi(z) = min_j |z - y_j| - v_j``, so that ``int phi d(mu - nu)`` equals
    the optimal value.
    """
    res = solve_mk(Euclidean(1), mu, nu)
    Z = union_support(mu, nu)
    D = Euclidean(1).matrix(Z, nu.points, mu.exact)
    v = res.target_potential.values
    vals = np.array([min(D[k] - v) for k in range(len(Z))], dtype=D.dtype)
    return Potential(Z, vals, metric_lip1=True)


class DualCheck(NamedTuple):
    lower_bound: object
    is_lip1: bool
    max_violation: float


def dual_check_w1(mu: DiscreteMeasure, nu: DiscreteMeasure, phi: Potential) -> DualCheck:
    """``int phi d(mu - nu)`` and whether ``phi`` is 1-Lipschitz on its support.

    When ``is_lip1`` holds the returned bound cannot exceed ``W_1(mu, nu)``
    beyond solver tolerance.
    """
    check_same_mode(mu, nu)
    S = np.asarray(phi.support)
    idx_mu = [locate(S, p) for p in mu.points]
    idx_nu = [locate(S, p) for p in nu.points]
    if min(idx_mu + idx_nu) < 0:
        raise SupportMismatch("phi must be defined on both supports")
    vals = phi.values
    bound = mu.weights @ vals[idx_mu] - nu.weights @ vals[idx_nu]
    Sf = S.astype(float)
    dist = np.linalg.norm(Sf[:, None, :] - Sf[None, :, :], axis=2)
    vf = vals.astype(float)
    excess = np.abs(vf[:, None] - vf[None, :]) - dist
    worst = float(np.max(excess)) if excess.size else 0.0
    return DualCheck(bound, worst <= EPS_DUAL, worst)


# ---------------------------------------------------------------------------
# Monge problem over index maps
# ---------------------------------------------------------------------------


def _search_maps(C, weights, capacities, exact, bound=None):
    """Cheapest map ``t`` with ``sum_{t(i)=j} w_i = cap_j`` for every ``j``.

    Depth-first over atoms in canonical order and targets in index order, so
    the first optimum met is the lexicographically smallest; later maps only
    replace it on strict improvement. ``bound(rows, residual)`` may return a
    lower bound for completing a partial map. Returns ``(map, value)`` or
    ``(None, None)``.
    """
    m, n = C.shape
    zero = Fraction(0) if exact else 0.0
    tol = 0 if exact else EPS_MASS
    final_tol = 0 if exact else EPS_MASS * n
    tie = 0 if (exact and is_exact(C)) else EPS_FEAS
    resid = list(capacities)
    t = [0] * m
    best_map, best_val = None, None

    def rec(i, acc):
        nonlocal best_map, best_val
        if i == m:
            if all(abs(r) <= final_tol for r in resid):
                if best_val is None or acc < best_val - tie:
                    best_map, best_val = tuple(t), acc
            return
        if bound is not None and best_val is not None:
            open_cols = [j for j in range(n) if resid[j] > final_tol]
            lb = bound(i, open_cols, [resid[j] for j in open_cols])
            if lb is not None and acc + lb >= best_val - tie:
                return
        w = weights[i]
        for j in range(n):
            if w <= resid[j] + tol:
                resid[j] -= w
                t[i] = j
                rec(i + 1, acc + w * C[i, j])
                resid[j] += w

    rec(0, zero)
    return best_map, best_val


def _lp_bound(C, weights, exact):
    def bound(i, cols, resid):
        if not cols:
            return None
        rows = list(range(i, len(weights)))
        supply = weights[rows]
        demand = np.array(resid, dtype=object if exact else float)
        if exact:
            total = sum(supply, Fraction(0))
            if total != sum(resid, Fraction(0)) or any(r <= 0 for r in resid):
                return None
        else:
            demand = demand * (supply.sum() / demand.sum())
        try:
            inst = TransportationInstance(supply, demand, C[np.ix_(rows, cols)])
        except Exception:
            return None
        return solve_transportation(inst).objective

    return bound


class MongeResult(NamedTuple):
    best_map: Optional[tuple]
    value: object
    gap: object
    kantorovich_value: object


def solve_monge_maps(c: CostSpec, mu: DiscreteMeasure, nu: DiscreteMeasure) -> MongeResult:
    """Minimize ``sum_i w_i c(x_i, y_t(i))`` over index maps with ``t_# mu = nu``.

    Exhaustive up to 8 source atoms, branch and bound with a transportation
    lower bound up to 12. ``best_map`` is ``None`` and ``value`` infinite when
    no map pushes ``mu`` onto ``nu``. ``gap`` is the excess over the
    Kantorovich value and is never negative beyond tolerance.
    """
    m = len(mu)
    if m > MONGE_MAX:
        raise SizeLimitExceeded(f"Monge search limited to {MONGE_MAX} atoms, got {m}")
    check_same_mode(mu, nu)
    C = cost_matrix(c, mu, nu)
    bound = None if m <= MONGE_EXHAUSTIVE_MAX else _lp_bound(C, mu.weights, mu.exact)
    best, value = _search_maps(C, mu.weights, nu.weights, mu.exact, bound)
    mk = solve_mk(c, mu, nu).value
    if best is None:
        return MongeResult(None, math.inf, math.inf, mk)
    return MongeResult(best, value, value - mk, mk)


# ---------------------------------------------------------------------------
# c-transforms
# ---------------------------------------------------------------------------


def _cost_on(c: CostSpec, X, Y, exact):
    X = np.asarray(X)
    Y = np.asarray(Y)
    C = c.matrix(X, Y, exact)
    return C if C.dtype == object else np.asarray(C, dtype=float)


def c_transform(
    c: CostSpec, psi: Potential, other_support, direction: str = "x->y"
) -> Potential:
    """``psi^c(y_j) = min_i c(x_i, y_j) - psi(x_i)``.

    With ``direction="y->x"`` the roles are swapped:
    ``phi^c(x_i) = min_j c(x_i, y_j) - phi(y_j)``. ``other_support`` holds the
    atoms of the side being mapped to.
    """
    vals = psi.values
    exact = is_exact(vals) or (
        np.asarray(psi.support).dtype == object and np.asarray(other_support).dtype == object
    )
    if direction == "x->y":
        C = _cost_on(c, psi.support, other_support, exact)
        out = [min(C[:, j] - vals) for j in range(C.shape[1])]
    elif direction == "y->x":
        C = _cost_on(c, other_support, psi.support, exact)
        out = [min(C[i, :] - vals) for i in range(C.shape[0])]
    else:
        raise ValueError(f"direction must be 'x->y' or 'y->x', got {direction!r}")
    dt = object if any(isinstance(v, Fraction) for v in out) else float
    return Potential(np.asarray(other_support), np.array(out, dtype=dt))


def double_c_transform(c: CostSpec, psi: Potential, other_support) -> Potential:
    """``psi^{cc}`` on the support of ``psi``; it dominates ``psi`` pointwise."""
    return c_transform(c, c_transform(c, psi, other_support), psi.support, "y->x")


def c_superdifferential(
    c: CostSpec, psi: Potential, other_support, x_index: int
) -> set[int]:
    """Indices ``j`` with ``psi(x') - psi(x) <= c(x', y_j) - c(x, y_j)`` for all ``x'``."""
    vals = psi.values
    exact = is_exact(vals) or np.asarray(psi.support).dtype == object
    C = _cost_on(c, psi.support, other_support, exact)
    slack = 0 if is_exact(C) and is_exact(vals) else EPS_DUAL
    out = set()
    for j in range(C.shape[1]):
        lhs = vals - vals[x_index]
        rhs = C[:, j] - C[x_index, j]
        if all(a <= b + slack for a, b in zip(lhs, rhs)):
            out.add(j)
    return out


# ---------------------------------------------------------------------------
# Cyclical monotonicity and twist
# ---------------------------------------------------------------------------


class CycleCheck(NamedTuple):
    monotone: bool
    violating_cycle: Optional[tuple]
    excess: object


def _pair_costs(c: CostSpec, pairs):
    p = len(pairs)
    P = [[eval_cost(c, pairs[a][0], pairs[b][1]) for b in range(p)] for a in range(p)]
    exact = all(isinstance(v, (Fraction, int)) for row in P for v in row)
    return np.array(P, dtype=object if exact else float), exact


def check_cyclical_monotonicity(c: CostSpec, pairs, k_max: int = 3) -> CycleCheck:
    """Look for a cycle of at most ``k_max`` pairs whose reassignment lowers the cost.

    Every permutation splits into cycles, so only cyclic reassignments
    ``x_{a_0} -> y_{a_1} -> ... -> y_{a_0}`` starting from their smallest
    index are tried. ``violating_cycle`` lists the pair indices
    ``(a_0, ..., a_{k-1})`` of the worst offender.
    """
    if k_max > 4:
        raise SizeLimitExceeded("exhaustive cycle search is limited to k_max <= 4")
    pairs = list(pairs)
    if len(pairs) < 2 or k_max < 2:
        return CycleCheck(True, None, 0)
    P, exact = _pair_costs(c, pairs)
    slack = 0 if exact else EPS_DUAL
    diag = [P[a, a] for a in range(len(pairs))]
    worst, witness = None, None
    for k in range(2, k_max + 1):
        for first in range(len(pairs)):
            rest = range(first + 1, len(pairs))
            for tail in itertools.permutations(rest, k - 1):
                cyc = (first,) + tail
                here = sum(diag[a] for a in cyc)
                moved = sum(P[cyc[s], cyc[(s + 1) % k]] for s in range(k))
                gain = here - moved
                if gain > slack and (worst is None or gain > worst):
                    worst, witness = gain, cyc
    if witness is None:
        return CycleCheck(True, None, 0)
    return CycleCheck(False, witness, worst)


class TwistViolation(NamedTuple):
    point_index: int
    pair_index: int
    gradient_norm: float


def check_twist(
    c: CostSpec, x_grid, y_pairs, h: Optional[float] = None, eps: float = EPS_TWIST
) -> list[TwistViolation]:
    """Grid points where ``x -> c(x, y1) - c(x, y2)`` looks critical.

    The gradient is taken by central differences with step
    ``h`` (default ``1e-4 * (1 + |x|)``) and flagged when its norm is at most
    ``eps``.
    """
    if isinstance(c, ExplicitMatrix) or not c.differentiable:
        raise NonDifferentiableCost(f"{type(c).__name__} cannot be differentiated in x")
    pairs = [(np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float)))
             for a, b in y_pairs]
    for a, b in pairs:
        if a.shape == b.shape and np.array_equal(a, b):
            raise ValueError("twist is only defined for distinct y1 != y2")
    out = []
    for gi, x in enumerate(x_grid):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        step = h if h is not None else 1e-4 * (1.0 + float(np.linalg.norm(x)))
        for pi, (y1, y2) in enumerate(pairs):
            grad = np.empty(len(x))
            for k in range(len(x)):
                e = np.zeros(len(x))
                e[k] = step
                hi = _fval(c, x + e, y1) - _fval(c, x + e, y2)
                lo = _fval(c, x - e, y1) - _fval(c, x - e, y2)
                grad[k] = (hi - lo) / (2 * step)
            norm = float(np.linalg.norm(grad))
            if norm <= eps:
                out.append(TwistViolation(gi, pi, norm))
    return out


def _fval(c, x, y):
    return float(eval_cost(c, tuple(x), tuple(y)))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def plan_to_csv(plan: TransportPlan, c: Optional[CostSpec] = None) -> str:
    """Sparse ``i,j,mass,cost`` rows for the support of ``plan``."""
    C = cost_matrix(c, plan.source, plan.target) if c is not None else None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "mass", "cost"])
    for i, j in plan.support():
        cost = "" if C is None else _json_num(C[i, j])
        w.writerow([i, j, _json_num(plan.matrix[i, j]), cost])
    return buf.getvalue()


def plan_to_dot(plan: TransportPlan, name: str = "plan", prefix: str = "") -> str:
    """Bipartite digraph from source atoms to target atoms, one edge per moved mass.

    Edge labels carry the mass and pen widths grow with it.
    """
    return "\n".join([f"digraph {name} {{", "  rankdir=LR;", *_dot_body(plan, prefix), "}"]) + "\n"


def _dot_body(plan, prefix=""):
    top = max(float(np.max(plan.matrix.astype(float))), 1e-300)
    lines = []
    for i in range(len(plan.source)):
        lines.append(f'  {prefix}x{i} [label="x{i + 1}", shape=circle];')
    for j in range(len(plan.target)):
        lines.append(f'  {prefix}y{j} [label="y{j + 1}", shape=doublecircle];')
    for i, j in plan.support():
        mass = plan.matrix[i, j]
        width = 1.0 + 4.0 * float(mass) / top
        label = str(mass) if isinstance(mass, Fraction) else f"{float(mass):.6g}"
        lines.append(f'  {prefix}x{i} -> {prefix}y{j} [label="{label}", penwidth={width:.3f}];')
    return lines


def plans_to_dot(name: str, plans) -> str:
    """Several labelled plans side by side, one cluster each."""
    out = [f"digraph {name} {{", "  rankdir=LR;"]
    for label, plan in plans:
        out.append(f"  subgraph cluster_{label} {{")
        out.append(f'    label="{label}";')
        out += ["  " + line for line in _dot_body(plan, prefix=f"{label}_")]
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
