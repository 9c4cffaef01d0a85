"""Meta-measures: finitely supported probability measures on P(Y).

Kept apart from :mod:`otclass.transport_class` so that disintegrations can
be pushed forward without a circular import.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, MassNotOne, NegativeWeight
from .kantorovich import wasserstein
from .measure import (
    EPS_MASS,
    DiscreteMeasure,
    _as_array,
    check_same_mode,
    measure_from_dict,
    measure_to_dict,
    mixture,
)
from .solver import TransportationInstance, solve_transportation

EPS_META = 1e-7


def _sort_key(lam: DiscreteMeasure):
    pts = tuple(tuple(float(c) for c in p) for p in lam.points)
    ws = tuple(float(w) for w in lam.weights)
    return (len(lam), pts, ws, lam.key())


@dataclass(frozen=True, eq=False)
class MetaMeasure:
    """``sum_i alpha_i delta_{lambda_i}`` with distinct atoms ``lambda_i``.

    Atoms are ordered by support size, then lexicographically by their data.
    Build through :func:`make_meta`.
    """

    atoms: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, copy=True)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @property
    def mode(self) -> str:
        return self.atoms[0].mode

    @property
    def exact(self) -> bool:
        return self.mode == "rational"

    def __len__(self):
        return len(self.atoms)

    def key(self):
        return (tuple(a.key() for a in self.atoms), tuple(self.weights))

    def __eq__(self, other):
        if not isinstance(other, MetaMeasure):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        parts = ", ".join(f"{w}*{a!r}" for a, w in zip(self.atoms, self.weights))
        return f"MetaMeasure({parts})"


def make_meta(atoms: Sequence[DiscreteMeasure], weights: Sequence) -> MetaMeasure:
    """Canonical meta-measure.

    Atoms closer than ``EPS_META`` in ``W_1`` (identical, in rational mode)
    are merged and their weights summed.
    """
    if len(atoms) == 0 or len(atoms) != len(weights):
        raise DimensionMismatch("need equally many meta-atoms and weights")
    mode = check_same_mode(*atoms)
    if len({a.dim for a in atoms}) != 1:
        raise DimensionMismatch("meta-atoms live in different dimensions")
    w = _as_array(list(weights), mode)
    if np.any(w < 0):
        raise NegativeWeight("meta-weights must be nonnegative")
    total = w.sum()
    if (total != 1) if mode == "rational" else abs(total - 1) > EPS_MASS:
        raise MassNotOne(f"meta-weights sum to {total}")
    reps: list[DiscreteMeasure] = []
    acc: list = []
    for lam, wi in zip(atoms, w):
        if wi == 0:
            continue
        k = _find(reps, lam)
        if k < 0:
            reps.append(lam)
            acc.append(wi)
        else:
            acc[k] = acc[k] + wi
    order = sorted(range(len(reps)), key=lambda k: _sort_key(reps[k]))
    ws = np.empty(len(order), dtype=object if mode == "rational" else float)
    ws[:] = [acc[k] for k in order]
    return MetaMeasure(tuple(reps[k] for k in order), ws)


def _find(reps, lam) -> int:
    for k, r in enumerate(reps):
        if r == lam:
            return k
    if lam.exact:
        return -1
    for k, r in enumerate(reps):
        if float(wasserstein(1, r, lam)) <= EPS_META:
            return k
    return -1


def generalized_barycenter(N: MetaMeasure) -> DiscreteMeasure:
    """The mixture ``sum_i alpha_i lambda_i``."""
    return mixture(N.atoms, N.weights)


def meta_wasserstein(N1: MetaMeasure, N2: MetaMeasure, cache: dict | None = None):
    """``W_1`` between meta-measures with ground distance ``W_1`` on P(Y).

    Each pairwise ground distance is one inner transport solve; results are
    memoized in ``cache`` (keyed by atom representation) when given.
    """
    check_same_mode(*N1.atoms, *N2.atoms)
    if N1.atoms[0].dim != N2.atoms[0].dim:
        raise DimensionMismatch("meta-measures over different spaces")
    cache = {} if cache is None else cache
    G = np.empty((len(N1), len(N2)), dtype=object)
    for i, a in enumerate(N1.atoms):
        for j, b in enumerate(N2.atoms):
            key = (a.key(), b.key())
            if key not in cache:
                cache[key] = Fraction(0) if a == b and a.exact else wasserstein(1, a, b)
            G[i, j] = cache[key]
    if not all(isinstance(g, Fraction) for g in G.ravel()):
        G = G.astype(float)
    inst = TransportationInstance(N1.weights, N2.weights, G)
    return solve_transportation(inst).objective


def meta_to_dict(N: MetaMeasure) -> dict:
    return {
        "atoms": [measure_to_dict(a) for a in N.atoms],
        "weights": [
            (f"{w.numerator}/{w.denominator}" if isinstance(w, Fraction) else float(w))
            for w in N.weights
        ],
    }


def meta_from_dict(data) -> MetaMeasure:
    atoms = [measure_from_dict(a) for a in data["atoms"]]
    return make_meta(atoms, data["weights"])
