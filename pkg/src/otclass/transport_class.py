"""Transport problems constrained to a transport class.

A class is given by a meta-measure ``Lambda = sum_j alpha_j delta_{lambda_j}``
whose generalized barycenter is the target ``nu``. Plans in the class are
``f (x) mu`` with ``f_# mu = Lambda``; for a discrete ``mu`` this means every
source atom is sent to one of the ``lambda_j`` and the masses sent to each
``lambda_j`` add up to ``alpha_j``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .disintegration import DisintegrationMap, recombine
from .errors import (
    DimensionMismatch,
    Infeasible,
    SizeLimitExceeded,
    UnsupportedCostVariant,
)
from .kantorovich import (
    MONGE_EXHAUSTIVE_MAX,
    MONGE_MAX,
    _lp_bound,
    _search_maps,
    solve_mk,
)
from .measure import (
    CostSpec,
    DiscreteMeasure,
    InnerProduct,
    Separable,
    _as_array,
    barycenter,
    check_same_mode,
    cost_matrix,
    dirac,
    eval_cost,
    is_exact,
    locate,
    make_measure,
)
from .meta import (
    EPS_META,
    MetaMeasure,
    generalized_barycenter,
    make_meta,
    meta_from_dict,
    meta_to_dict,
    meta_wasserstein,
)
from .kantorovich import wasserstein
from .solver import (
    EPS_DUAL,
    Status,
    TransportationInstance,
    solve_lp_dense,
    solve_transportation,
)

__all__ = [
    "MetaMeasure",
    "make_meta",
    "generalized_barycenter",
    "meta_wasserstein",
    "meta_to_dict",
    "meta_from_dict",
    "check_class_constraint",
    "lifted_cost",
    "lifted_cost_matrix",
    "class_of_map",
    "solve_class_problem",
    "compare_with_kantorovich",
    "diagnose_existence",
    "solve_allocation",
    "ClassProblemReport",
]

PROFILE_VERTEX_CAP = 6


def check_class_constraint(Lambda: MetaMeasure, nu: DiscreteMeasure) -> bool:
    """Whether the mixture of ``Lambda``'s atoms is ``nu``."""
    if Lambda.atoms[0].dim != nu.dim:
        raise DimensionMismatch(f"Lambda lives over R^{Lambda.atoms[0].dim}, nu over R^{nu.dim}")
    check_same_mode(nu, *Lambda.atoms)
    bary = generalized_barycenter(Lambda)
    if bary == nu:
        return True
    if nu.exact:
        return False
    return float(wasserstein(1, bary, nu)) <= EPS_META


def lifted_cost(c: CostSpec, x, lam: DiscreteMeasure, target: Optional[DiscreteMeasure] = None):
    """``c~(x, lambda) = sum_k lambda_k c(x, y_k)``.

    For index-based costs ``x`` is a source atom index and ``target`` is the
    measure whose canonical atoms the cost is indexed by.
    """
    total = Fraction(0) if lam.exact else 0.0
    for p, w in zip(lam.points, lam.weights):
        if c.index_based:
            if target is None:
                raise TypeError("index-based costs need the reference target measure")
            y = locate(target.points, p)
            if y < 0:
                raise ValueError(f"atom {tuple(p)} is not in the reference target")
        else:
            y = tuple(p)
        total = total + w * eval_cost(c, x, y)
    return total


def lifted_cost_matrix(c: CostSpec, mu: DiscreteMeasure, Lambda: MetaMeasure) -> np.ndarray:
    """``C~[i, j] = c~(x_i, lambda_j)``, computed as ``C @ L.T`` over the atoms of nu."""
    nu = generalized_barycenter(Lambda)
    C = cost_matrix(c, mu, nu)
    exact = is_exact(C)
    L = np.empty((len(Lambda), len(nu)), dtype=object if nu.exact else float)
    L[:] = Fraction(0) if nu.exact else 0.0
    for j, lam in enumerate(Lambda.atoms):
        for p, w in zip(lam.points, lam.weights):
            L[j, locate(nu.points, p)] = w
    if not exact:
        L = L.astype(float)
    out = C @ L.T
    return out if exact else np.asarray(out, dtype=float)


def class_of_map(t, mu: DiscreteMeasure) -> MetaMeasure:
    """``sum_i mu_i delta_{delta_{t(x_i)}}`` for a map given by target points."""
    from .measure import _assignment_targets

    targets = _assignment_targets(t, len(mu))
    return make_meta([dirac(y, mu.mode) for y in targets], mu.weights)


@dataclass(frozen=True, eq=False)
class ClassProblemReport:
    relaxed_value: object
    map_value: object
    gap: object
    feasible_maps_exist: bool
    optimal_assignment: Optional[tuple]
    degeneracy_flags: list = field(default_factory=list)
    plan_value: object = None
    relaxed_plan: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        return {
            "relaxed_value": _num(self.relaxed_value),
            "map_value": _num(self.map_value),
            "gap": _num(self.gap),
            "feasible_maps_exist": self.feasible_maps_exist,
            "optimal_assignment": (
                list(self.optimal_assignment) if self.optimal_assignment is not None else None
            ),
            "degeneracy_flags": list(self.degeneracy_flags),
            "plan_value": _num(self.plan_value),
        }


def _num(v):
    if v is None:
        return None
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _class_plan(mu: DiscreteMeasure, Lambda: MetaMeasure, t: Sequence[int]):
    f = DisintegrationMap(mu, tuple(Lambda.atoms[j] for j in t))
    return recombine(f, mu)


def solve_class_problem(
    c: CostSpec, mu: DiscreteMeasure, Lambda: MetaMeasure, diagnose: bool = True
) -> ClassProblemReport:
    """Relaxed and map-constrained problems in the class ``Lambda``.

    ``relaxed_value`` is the Kantorovich value between ``mu`` and the weights
    of ``Lambda`` under the lifted cost. ``map_value`` minimizes
    ``sum_i mu_i c~(x_i, lambda_t(i))`` over assignments whose weights
    reproduce ``Lambda`` exactly; the same value is then recomputed by
    integrating ``c`` against the plan ``f (x) mu`` and the two must agree.
    """
    m = len(mu)
    if m > MONGE_MAX:
        raise SizeLimitExceeded(f"class search limited to {MONGE_MAX} atoms, got {m}")
    check_same_mode(mu, *Lambda.atoms)
    Ct = lifted_cost_matrix(c, mu, Lambda)
    inst = TransportationInstance(mu.weights, Lambda.weights, Ct)
    relaxed = solve_transportation(inst)
    bound = None if m <= MONGE_EXHAUSTIVE_MAX else _lp_bound(Ct, mu.weights, mu.exact)
    t, value = _search_maps(Ct, mu.weights, Lambda.weights, mu.exact, bound)
    flags = []
    if diagnose:
        kind = isinstance(c, (InnerProduct, Separable))
        report = diagnose_existence(c, mu, Lambda, closed_form=kind)
        flags = [p for p in report.pairs if p.flagged or p.tie_degenerate]
    if t is None:
        return ClassProblemReport(
            relaxed.objective, math.inf, math.inf, False, None, flags, None, relaxed.plan
        )
    plan_value = _class_plan(mu, Lambda, t).cost(c)
    tol = 0 if is_exact(Ct) else EPS_DUAL * (1 + abs(float(value)))
    if abs(plan_value - value) > tol:
        raise AssertionError(
            f"assignment value {value} differs from plan integral {plan_value}"
        )
    return ClassProblemReport(
        relaxed.objective, value, value - relaxed.objective, True, t, flags, plan_value,
        relaxed.plan,
    )


class KantorovichComparison(NamedTuple):
    mk_value: object
    class_value: object
    inequality_holds: bool


def compare_with_kantorovich(c: CostSpec, mu: DiscreteMeasure, Lambda: MetaMeasure):
    """Unconstrained value against the relaxed class value; the first never exceeds the second."""
    nu = generalized_barycenter(Lambda)
    mk = solve_mk(c, mu, nu).value
    Ct = lifted_cost_matrix(c, mu, Lambda)
    cls = solve_transportation(TransportationInstance(mu.weights, Lambda.weights, Ct)).objective
    return KantorovichComparison(mk, cls, bool(mk <= cls + EPS_DUAL))


# ---------------------------------------------------------------------------
# Degeneracy diagnostics
# ---------------------------------------------------------------------------


class PairDiagnostic(NamedTuple):
    i: int
    j: int
    discriminant: object
    flagged: bool
    tie_degenerate: bool
    spread: object

    def to_dict(self):
        disc = self.discriminant
        if isinstance(disc, tuple):
            disc = [_num(v) for v in disc]
        else:
            disc = _num(disc)
        return {
            "pair": [self.i, self.j],
            "discriminant": disc,
            "flagged": self.flagged,
            "tie_degenerate": self.tie_degenerate,
            "spread": _num(self.spread),
        }


class ExistenceReport(NamedTuple):
    cost: str
    pairs: list

    def to_dict(self):
        return {"cost": self.cost, "pairs": [p.to_dict() for p in self.pairs]}


def diagnose_existence(
    c: CostSpec, mu: DiscreteMeasure, Lambda: MetaMeasure, closed_form: bool = True
) -> ExistenceReport:
    """Per meta-atom pair: closed-form discriminant and observed tie structure.

    For ``InnerProduct`` the discriminant is ``beta(lambda_i) - beta(lambda_j)``;
    for ``Separable`` it is ``int b d(lambda_i - lambda_j)``. A pair is flagged
    when it vanishes. Independently of the cost variant, a pair is
    ``tie_degenerate`` when ``x -> c~(x, lambda_i) - c~(x, lambda_j)`` is
    constant over the atoms of ``mu``: mass can then move between the two
    atoms at no cost.
    """
    if closed_form and not isinstance(c, (InnerProduct, Separable)):
        raise UnsupportedCostVariant(
            f"no closed-form criterion for {type(c).__name__}; pass closed_form=False"
        )
    Ct = lifted_cost_matrix(c, mu, Lambda)
    exact = is_exact(Ct)
    nu = generalized_barycenter(Lambda)
    pairs = []
    for i, j in itertools.combinations(range(len(Lambda)), 2):
        disc, flagged = None, False
        if closed_form:
            disc = _discriminant(c, Lambda.atoms[i], Lambda.atoms[j], nu)
            if isinstance(disc, tuple):
                size = max((abs(v) for v in disc), default=0)
            else:
                size = abs(disc)
            flagged = size == 0 if _exact_value(disc) else float(size) <= EPS_DUAL
        diff = Ct[:, i] - Ct[:, j]
        mean = (mu.weights @ diff) if exact else float(mu.weights.astype(float) @ diff)
        spread = max(abs(d - mean) for d in diff)
        tie = spread == 0 if exact else float(spread) <= EPS_DUAL
        pairs.append(PairDiagnostic(i, j, disc, flagged, tie, spread))
    return ExistenceReport(type(c).__name__, pairs)


def _exact_value(v) -> bool:
    vals = v if isinstance(v, tuple) else (v,)
    return all(isinstance(x, (Fraction, int)) for x in vals)


def _discriminant(c, a: DiscreteMeasure, b: DiscreteMeasure, nu: DiscreteMeasure):
    if isinstance(c, InnerProduct):
        return tuple(p - q for p, q in zip(barycenter(a), barycenter(b)))
    if callable(c.b):
        ia = sum((w * c.b(tuple(p)) for p, w in zip(a.points, a.weights)), 0)
        ib = sum((w * c.b(tuple(p)) for p, w in zip(b.points, b.weights)), 0)
        return ia - ib
    bvals = _as_array(list(c.b), nu.mode)
    if len(bvals) != len(nu):
        raise DimensionMismatch("sampled b must have one value per atom of nu")

    def integral(lam):
        return sum(
            (w * bvals[locate(nu.points, p)] for p, w in zip(lam.points, lam.weights)),
            Fraction(0) if nu.exact else 0.0,
        )

    return integral(a) - integral(b)


# ---------------------------------------------------------------------------
# Optimal allocation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AllocationResult:
    blend_weights: tuple
    partition: Optional[tuple]
    value: object
    report: ClassProblemReport
    exhaustive: bool
    candidates: int


def _profile_system(profiles, nu):
    mode = check_same_mode(nu, *profiles)
    pts = [tuple(p) for lam in profiles for p in lam.points] + [tuple(p) for p in nu.points]
    support = make_measure(pts, [1] * len(pts), mode=mode, normalize=True).points
    exact = mode == "rational"
    A = np.empty((len(support), len(profiles)), dtype=object if exact else float)
    A[:] = Fraction(0) if exact else 0.0
    for k, lam in enumerate(profiles):
        for p, w in zip(lam.points, lam.weights):
            A[locate(support, p), k] = w
    b = np.empty(len(support), dtype=A.dtype)
    b[:] = Fraction(0) if exact else 0.0
    for p, w in zip(nu.points, nu.weights):
        b[locate(support, p)] = w
    return A, b, exact


def _solve_square(A, b, exact):
    """Unique solution of ``A x = b`` for full-column-rank ``A``, else ``None``."""
    r, k = A.shape
    M = np.concatenate([A, b[:, None]], axis=1).astype(object if exact else float)
    tol = 0 if exact else 1e-12
    row = 0
    pivots = []
    for col in range(k):
        piv = next((i for i in range(row, r) if abs(M[i, col]) > tol), None)
        if piv is None:
            return None
        M[[row, piv]] = M[[piv, row]]
        M[row] = M[row] / M[row, col]
        for i in range(r):
            if i != row and M[i, col] != 0:
                M[i] = M[i] - M[i, col] * M[row]
        pivots.append(col)
        row += 1
    if any(abs(M[i, -1]) > (0 if exact else 1e-9) for i in range(row, r)):
        return None
    return M[:k, -1]


def _blend_vertices(A, b, exact):
    k = A.shape[1]
    seen, out = set(), []
    for size in range(1, k + 1):
        for cols in itertools.combinations(range(k), size):
            x = _solve_square(A[:, cols], b, exact)
            if x is None:
                continue
            if any(v < (0 if exact else -1e-12) for v in x):
                continue
            alpha = [Fraction(0) if exact else 0.0] * k
            for c_, v in zip(cols, x):
                alpha[c_] = v if exact else max(float(v), 0.0)
            key = tuple(alpha) if exact else tuple(round(a, 12) for a in alpha)
            if key not in seen:
                seen.add(key)
                out.append(tuple(alpha))
    return out


def solve_allocation(
    c: CostSpec,
    mu: DiscreteMeasure,
    profiles: Sequence[DiscreteMeasure],
    nu: DiscreteMeasure,
) -> AllocationResult:
    """Blend weights ``alpha`` with ``sum_k alpha_k lambda_k = nu`` and the best partition.

    Feasibility is settled by a dense LP. With at most six profiles every
    vertex of the blend polytope is tried and the cheapest class problem
    kept; otherwise only the LP's basic solution is used and ``exhaustive``
    is ``False``. ``partition[i]`` is the profile index serving atom ``i``.
    """
    if len(mu) > MONGE_MAX:
        raise SizeLimitExceeded(f"allocation limited to {MONGE_MAX} source atoms")
    profiles = list(profiles)
    A, b, exact = _profile_system(profiles, nu)
    lp = solve_lp_dense([Fraction(0) if exact else 0.0] * len(profiles), A, b)
    if lp.status is not Status.OPTIMAL:
        raise Infeasible("no blend of the profiles reproduces nu")
    if len(profiles) <= PROFILE_VERTEX_CAP:
        candidates = _blend_vertices(A, b, exact)
        exhaustive = True
    else:
        candidates = [tuple(lp.x)]
        exhaustive = False
    best = None
    for alpha in candidates:
        used = [k for k, a in enumerate(alpha) if a > 0]
        Lambda = make_meta([profiles[k] for k in used], [alpha[k] for k in used])
        report = solve_class_problem(c, mu, Lambda, diagnose=False)
        if best is None or (
            report.feasible_maps_exist
            and (not best[1].feasible_maps_exist or report.map_value < best[1].map_value)
        ):
            best = (alpha, report, Lambda)
    alpha, report, Lambda = best
    partition = None
    if report.feasible_maps_exist:
        owner = []
        for j in report.optimal_assignment:
            owner.append(next(k for k, lam in enumerate(profiles) if lam == Lambda.atoms[j]))
        partition = tuple(owner)
    return AllocationResult(alpha, partition, report.map_value, report, exhaustive, len(candidates))
