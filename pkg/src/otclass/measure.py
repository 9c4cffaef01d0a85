"""Finitely supported probability measures and ground costs.

Measures come in two numeric modes. ``"float"`` stores coordinates and
weights as ``float64`` arrays; ``"rational"`` stores them as object arrays of
:class:`fractions.Fraction`, so that push-forward feasibility and class
equality can be decided exactly. All values are immutable once built.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Real
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    IncompleteAssignment,
    IndexOutOfRange,
    MassNotOne,
    ModeMismatch,
    NegativeWeight,
)

EPS_MASS = 1e-9
EPS_GEOM = 1e-12
MAX_DIM = 16

MODES = ("float", "rational")


def to_fraction(value) -> Fraction:
    """Exact rational reading of ``value``.

    Floats are read through their shortest decimal repr, so ``0.1`` becomes
    ``1/10`` rather than the binary expansion. Strings may be ``"p/q"``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, (Integral, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(float(value)))
    raise TypeError(f"cannot read {value!r} as a rational number")


def _as_array(values, mode: str) -> np.ndarray:
    if mode == "rational":
        flat = [to_fraction(v) for v in np.asarray(values, dtype=object).ravel()]
        out = np.empty(len(flat), dtype=object)
        out[:] = flat
        return out.reshape(np.shape(values))
    raw = np.asarray(values, dtype=object)
    if any(isinstance(v, str) for v in raw.ravel()):
        # "p/q" strings are allowed in float mode too
        raw = np.array([float(Fraction(v.strip())) if isinstance(v, str) else v
                        for v in raw.ravel()], dtype=object).reshape(raw.shape)
    out = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite entries")
    return out


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


def is_exact(a) -> bool:
    """True when an array holds exact rationals (object dtype)."""
    return isinstance(a, np.ndarray) and a.dtype == object


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """A probability measure ``sum_i w_i delta_{x_i}`` on R^d.

    Instances are canonical: atoms are pairwise distinct and sorted
    lexicographically, and every weight is strictly positive. Build them with
    :func:`make_measure`; the constructor trusts its input.
    """

    points: np.ndarray
    weights: np.ndarray
    mode: str = "float"

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(self.points))
        object.__setattr__(self, "weights", _frozen(self.weights))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def exact(self) -> bool:
        return self.mode == "rational"

    def atom(self, i: int) -> tuple:
        return tuple(self.points[i])

    def atoms(self) -> list[tuple]:
        return [tuple(p) for p in self.points]

    def key(self) -> tuple:
        """Hashable representation; equal measures have equal keys."""
        return (self.mode, tuple(map(tuple, self.points)), tuple(self.weights))

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        terms = ", ".join(
            f"{_fmt(w)}@{_fmt_point(p)}" for p, w in zip(self.points, self.weights)
        )
        return f"DiscreteMeasure[{self.mode}]({terms})"

    def is_dirac(self) -> bool:
        return len(self) == 1


def _fmt(v) -> str:
    return str(v) if isinstance(v, Fraction) else f"{float(v):.6g}"


def _fmt_point(p) -> str:
    return "(" + ",".join(_fmt(c) for c in p) + ")"


def _coerce_points(points) -> list:
    pts = []
    for p in points:
        if isinstance(p, (Real, Fraction, str, np.number)) and not isinstance(p, bool):
            pts.append((p,))
        else:
            pts.append(tuple(p))
    return pts


def make_measure(
    points: Sequence,
    weights: Sequence,
    mode: str = "float",
    normalize: bool = False,
) -> DiscreteMeasure:
    """Build a canonical discrete measure.

    Parameters
    ----------
    points : sequence of points
        Scalars are accepted as 1-D points.
    weights : sequence of nonnegative numbers
        Same length as ``points``. In rational mode strings ``"p/q"`` are read
        exactly.
    mode : {"float", "rational"}
    normalize : bool
        Rescale the weights to total mass one. Without it the weights must
        already sum to one (exactly in rational mode, within ``EPS_MASS``
        otherwise).

    Returns
    -------
    DiscreteMeasure
        Zero-weight atoms dropped, duplicate atoms merged with summed
        weights, atoms sorted lexicographically.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    pts = _coerce_points(points)
    if len(pts) == 0 or len(pts) != len(weights):
        raise DimensionMismatch(
            f"need equally many points and weights, got {len(pts)} and {len(weights)}"
        )
    dims = {len(p) for p in pts}
    if len(dims) != 1:
        raise DimensionMismatch(f"points have inconsistent dimensions {sorted(dims)}")
    d = dims.pop()
    if d == 0 or d > MAX_DIM:
        raise DimensionMismatch(f"dimension must be in 1..{MAX_DIM}, got {d}")

    P = _as_array(pts, mode).reshape(len(pts), d)
    w = _as_array(list(weights), mode)
    if np.any(w < 0):
        raise NegativeWeight(f"negative weight {min(w)}")
    total = w.sum()
    if normalize:
        if total <= 0:
            raise MassNotOne("cannot normalize zero total mass")
        w = w / total
    elif mode == "rational":
        if total != 1:
            raise MassNotOne(f"weights sum to {total}, not 1")
    elif abs(total - 1.0) > EPS_MASS:
        raise MassNotOne(f"weights sum to {total!r}, not 1 within {EPS_MASS}")

    keep = w > 0
    P, w = P[keep], w[keep]
    if len(w) == 0:
        raise MassNotOne("all weights are zero")
    P, w = _canonicalize(P, w, mode)
    return DiscreteMeasure(P, w, mode)


def _canonicalize(P: np.ndarray, w: np.ndarray, mode: str):
    m, d = P.shape
    if mode == "rational":
        acc: dict[tuple, Fraction] = {}
        for p, wi in zip(map(tuple, P), w):
            acc[p] = acc.get(p, Fraction(0)) + wi
        keys = sorted(acc)
        Pc = np.empty((len(keys), d), dtype=object)
        for i, k in enumerate(keys):
            Pc[i, :] = k
        wc = np.empty(len(keys), dtype=object)
        wc[:] = [acc[k] for k in keys]
        return Pc, wc

    order = np.lexsort(P.T[::-1])
    P, w = P[order], w[order]
    reps: list[int] = []
    owner = np.empty(m, dtype=int)
    for i in range(m):
        if reps:
            dist = np.linalg.norm(P[reps] - P[i], axis=1)
            hit = np.flatnonzero(dist <= EPS_GEOM)
            if hit.size:
                owner[i] = hit[0]
                continue
        owner[i] = len(reps)
        reps.append(i)
    if len(reps) == m:
        return P, w
    wc = np.zeros(len(reps))
    for i in range(m):
        wc[owner[i]] += w[i]
    return P[reps], wc


def dirac(point, mode: str = "float") -> DiscreteMeasure:
    return make_measure([point], [1], mode=mode)


def check_same_mode(*measures: DiscreteMeasure) -> str:
    modes = {m.mode for m in measures}
    if len(modes) != 1:
        raise ModeMismatch(f"cannot mix measure modes {sorted(modes)}")
    return modes.pop()


def barycenter(m: DiscreteMeasure) -> tuple:
    """Weighted mean ``sum_i w_i x_i`` of the atoms."""
    return tuple(m.weights @ m.points)


def _assignment_targets(assignment, size: int) -> list:
    if isinstance(assignment, Mapping):
        missing = [i for i in range(size) if i not in assignment]
        if missing:
            raise IncompleteAssignment(f"no target for atom indices {missing}")
        return [assignment[i] for i in range(size)]
    targets = list(assignment)
    if len(targets) != size:
        raise IncompleteAssignment(
            f"assignment covers {len(targets)} atoms, measure has {size}"
        )
    return targets


def pushforward_by_index_map(m: DiscreteMeasure, assignment) -> DiscreteMeasure:
    """Image measure ``t_# m`` for a map given atom-by-atom.

    ``assignment`` is a sequence of target points aligned with the canonical
    atom order of ``m``, or a mapping from atom index to target point.
    """
    targets = _assignment_targets(assignment, len(m))
    return make_measure(targets, list(m.weights), mode=m.mode)


def mixture(measures: Sequence[DiscreteMeasure], coefficients: Sequence) -> DiscreteMeasure:
    """The convex combination ``sum_k a_k m_k`` as a canonical measure."""
    mode = check_same_mode(*measures)
    pts, ws = [], []
    for a, mk in zip(coefficients, measures):
        for p, w in zip(mk.points, mk.weights):
            pts.append(tuple(p))
            ws.append(a * w)
    return make_measure(pts, ws, mode=mode)


def union_support(*measures: DiscreteMeasure) -> np.ndarray:
    """Canonical sorted union of atom locations (duplicates merged)."""
    mode = check_same_mode(*measures)
    pts = [tuple(p) for mk in measures for p in mk.points]
    u = make_measure(pts, [1] * len(pts), mode=mode, normalize=True)
    return u.points


def locate(points: np.ndarray, p) -> int:
    """Index of ``p`` among ``points`` (exact or within ``EPS_GEOM``), or -1."""
    p = np.asarray(p, dtype=points.dtype)
    if points.dtype == object:
        for i, q in enumerate(points):
            if all(a == b for a, b in zip(q, p)):
                return i
        return -1
    if len(points) == 0:
        return -1
    dist = np.linalg.norm(points.astype(float) - p.astype(float), axis=1)
    i = int(np.argmin(dist))
    return i if dist[i] <= EPS_GEOM else -1


# ---------------------------------------------------------------------------
# Costs
# ---------------------------------------------------------------------------


class CostSpec:
    """Base class of ground costs ``c(x, y)``.

    Point-based costs (``Euclidean``, ``SquaredEuclidean``, ``InnerProduct``,
    ``Separable`` with callables) are evaluated on coordinates. Index-based
    costs (``ExplicitMatrix``, ``Separable`` with sampled arrays) are evaluated
    on canonical atom indices.
    """

    index_based = False
    nonnegative = True
    differentiable = True

    def matrix(self, X: np.ndarray, Y: np.ndarray, exact: bool) -> np.ndarray:
        raise NotImplementedError

    def point(self, x, y):
        raise NotImplementedError


def _diff_powers(X, Y, exact):
    if exact:
        D = np.empty((len(X), len(Y)), dtype=object)
        for i, x in enumerate(X):
            for j, y in enumerate(Y):
                D[i, j] = sum(((a - b) ** 2 for a, b in zip(x, y)), Fraction(0))
        return D
    diff = X.astype(float)[:, None, :] - Y.astype(float)[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


@dataclass(frozen=True)
class Euclidean(CostSpec):
    """``|x - y|^p`` for ``p >= 1``."""

    p: float = 1

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"Euclidean cost needs p >= 1, got {self.p}")

    def _exact_possible(self, d: int) -> bool:
        p = self.p
        return float(p).is_integer() and (d == 1 or int(p) % 2 == 0)

    def matrix(self, X, Y, exact):
        d = X.shape[1]
        if exact and self._exact_possible(d):
            p = int(self.p)
            if d == 1:
                D = np.empty((len(X), len(Y)), dtype=object)
                for i in range(len(X)):
                    for j in range(len(Y)):
                        D[i, j] = abs(X[i, 0] - Y[j, 0]) ** p
                return D
            return _diff_powers(X, Y, True) ** (p // 2)
        sq = _diff_powers(X, Y, False)
        return np.sqrt(sq) ** float(self.p) if self.p != 2 else sq

    def point(self, x, y):
        return self.matrix(np.asarray([x]), np.asarray([y]), _all_exact(x, y))[0, 0]


@dataclass(frozen=True)
class SquaredEuclidean(CostSpec):
    """``|x - y|^2``."""

    def matrix(self, X, Y, exact):
        return _diff_powers(X, Y, exact)

    def point(self, x, y):
        return self.matrix(np.asarray([x]), np.asarray([y]), _all_exact(x, y))[0, 0]


@dataclass(frozen=True)
class InnerProduct(CostSpec):
    """``<x, y>``; the one built-in cost that may be negative."""

    nonnegative = False

    def matrix(self, X, Y, exact):
        if exact:
            return X.astype(object) @ Y.astype(object).T
        return X.astype(float) @ Y.astype(float).T

    def point(self, x, y):
        return self.matrix(np.asarray([x]), np.asarray([y]), _all_exact(x, y))[0, 0]


@dataclass(frozen=True)
class ExplicitMatrix(CostSpec):
    rows: tuple

    index_based = True
    differentiable = False

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        widths = {len(r) for r in rows}
        if len(rows) == 0 or len(widths) != 1:
            raise DimensionMismatch("cost matrix must be a non-empty rectangle")
        object.__setattr__(self, "rows", rows)

    @property
    def shape(self):
        return len(self.rows), len(self.rows[0])

    def matrix(self, X, Y, exact):
        if (len(X), len(Y)) != self.shape:
            raise DimensionMismatch(
                f"cost matrix is {self.shape}, supports are {len(X)}x{len(Y)}"
            )
        return _as_array(self.rows, "rational" if exact else "float")

    def index(self, i, j):
        m, n = self.shape
        if not (0 <= i < m and 0 <= j < n):
            raise IndexOutOfRange(f"({i}, {j}) outside {m}x{n} cost matrix")
        return self.rows[i][j]


@dataclass(frozen=True)
class Separable(CostSpec):
    """``a(x) * b(y)``.

    ``a`` and ``b`` are either sequences sampled on the canonical atoms of the
    two supports, or callables on points. Only the callable form of ``a``
    supports finite-difference checks.
    """

    a: Union[Sequence, Callable]
    b: Union[Sequence, Callable]

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if not callable(v):
                object.__setattr__(self, name, tuple(v))

    @property
    def index_based(self):
        return not (callable(self.a) and callable(self.b))

    @property
    def differentiable(self):
        return callable(self.a)

    nonnegative = False

    def _side(self, f, Z, exact, name):
        if callable(f):
            vals = [f(tuple(z)) for z in Z]
        else:
            if len(f) != len(Z):
                raise DimensionMismatch(
                    f"separable factor {name} has {len(f)} samples, support has {len(Z)}"
                )
            vals = list(f)
        return _as_array(vals, "rational" if exact else "float")

    def matrix(self, X, Y, exact):
        a = self._side(self.a, X, exact, "a")
        b = self._side(self.b, Y, exact, "b")
        return np.outer(a, b)

    def factor(self, f, z):
        if callable(f):
            return f(tuple(np.atleast_1d(z)))
        if not isinstance(z, (Integral, np.integer)):
            raise TypeError("sampled separable factors take atom indices")
        if not 0 <= z < len(f):
            raise IndexOutOfRange(f"index {z} outside {len(f)} samples")
        return f[z]


def _all_exact(*points) -> bool:
    return all(isinstance(c, (Fraction, Integral)) for p in points for c in p)


def eval_cost(c: CostSpec, x, y):
    """Evaluate ``c(x, y)``.

    ``x`` and ``y`` are points (sequences of coordinates) for point-based
    costs and integer atom indices for index-based ones. Exact inputs give
    exact outputs where the variant allows it. ``InnerProduct`` and
    ``Separable`` may return negative values; check ``c.nonnegative``.
    """
    if isinstance(c, ExplicitMatrix):
        return c.index(_as_index(x), _as_index(y))
    if isinstance(c, Separable):
        return c.factor(c.a, x) * c.factor(c.b, y)
    x = tuple(np.atleast_1d(np.asarray(x, dtype=object)))
    y = tuple(np.atleast_1d(np.asarray(y, dtype=object)))
    if len(x) != len(y):
        raise DimensionMismatch(f"points of dimension {len(x)} and {len(y)}")
    return c.point(x, y)


def _as_index(i) -> int:
    if not isinstance(i, (Integral, np.integer)) or isinstance(i, bool):
        raise TypeError(f"matrix costs take integer indices, got {i!r}")
    return int(i)


def cost_matrix(c: CostSpec, mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    """``C[i, j] = c(x_i, y_j)`` over the canonical atoms of ``mu`` and ``nu``.

    Rational measures give an object array of Fractions whenever the cost
    variant can be evaluated exactly; otherwise a float array.
    """
    mode = check_same_mode(mu, nu)
    if not c.index_based and mu.dim != nu.dim:
        raise DimensionMismatch(f"supports live in R^{mu.dim} and R^{nu.dim}")
    C = c.matrix(mu.points, nu.points, mode == "rational")
    if C.dtype != object:
        C = np.asarray(C, dtype=float)
    C.flags.writeable = False
    return C


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _num_to_json(v, exact: bool):
    if exact:
        v = to_fraction(v)
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return float(v)


def measure_to_dict(m: DiscreteMeasure) -> dict:
    ex = m.exact
    return {
        "dim": m.dim,
        "mode": m.mode,
        "atoms": [[_num_to_json(c, ex) for c in p] for p in m.points],
        "weights": [
            (f"{w.numerator}/{w.denominator}" if ex else float(w)) for w in m.weights
        ],
    }


def measure_from_dict(data: Mapping) -> DiscreteMeasure:
    for key in ("atoms", "weights"):
        if key not in data:
            raise KeyError(f"measure JSON is missing field {key!r}")
    mode = data.get("mode", "float")
    m = make_measure(data["atoms"], data["weights"], mode=mode)
    if "dim" in data and int(data["dim"]) != m.dim:
        raise DimensionMismatch(f"field 'dim' says {data['dim']}, atoms have {m.dim}")
    return m


def cost_to_dict(c: CostSpec) -> dict:
    if isinstance(c, Euclidean):
        return {"cost": "euclidean", "p": c.p}
    if isinstance(c, SquaredEuclidean):
        return {"cost": "sqeuclidean"}
    if isinstance(c, InnerProduct):
        return {"cost": "inner"}
    if isinstance(c, ExplicitMatrix):
        return {"cost": "matrix", "rows": [[_jsonable(v) for v in r] for r in c.rows]}
    if isinstance(c, Separable):
        if callable(c.a) or callable(c.b):
            raise TypeError("callable separable factors cannot be serialized")
        return {
            "cost": "separable",
            "a": [_jsonable(v) for v in c.a],
            "b": [_jsonable(v) for v in c.b],
        }
    raise TypeError(f"unknown cost {c!r}")


def _jsonable(v):
    if isinstance(v, Fraction):
        return _num_to_json(v, True)
    return v


def cost_from_dict(data: Mapping) -> CostSpec:
    if "cost" not in data:
        raise KeyError("cost JSON is missing field 'cost'")
    kind = data["cost"]
    if kind == "euclidean":
        return Euclidean(data.get("p", 1))
    if kind == "sqeuclidean":
        return SquaredEuclidean()
    if kind == "inner":
        return InnerProduct()
    if kind == "matrix":
        if "rows" not in data:
            raise KeyError("matrix cost JSON is missing field 'rows'")
        return ExplicitMatrix(data["rows"])
    if kind == "separable":
        return Separable(data["a"], data["b"])
    raise ValueError(f"unknown cost kind {kind!r} in field 'cost'")


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)
