"""Disintegration of discrete transport plans.

A plan ``gamma`` on ``X x Y`` with first marginal ``mu`` is the same thing as
a map ``x_i -> gamma_i`` into P(Y), with ``gamma_i`` the normalized i-th row.
Pushing that map forward through ``mu`` gives a meta-measure, and two plans
are in the same transport class when these meta-measures coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .errors import BaseMismatch, DimensionMismatch, SourceMismatch
from .kantorovich import TransportPlan
from .measure import (
    DiscreteMeasure,
    barycenter,
    check_same_mode,
    locate,
    make_measure,
    measure_from_dict,
    measure_to_dict,
    union_support,
)
from .meta import EPS_META, MetaMeasure, make_meta, meta_wasserstein


@dataclass(frozen=True, eq=False)
class DisintegrationMap:
    """One conditional measure on Y per atom of ``base``."""

    base: DiscreteMeasure
    conditionals: tuple

    def __post_init__(self):
        conds = tuple(self.conditionals)
        if len(conds) != len(self.base):
            raise DimensionMismatch(
                f"{len(conds)} conditionals for a base with {len(self.base)} atoms"
            )
        check_same_mode(self.base, *conds)
        object.__setattr__(self, "conditionals", conds)

    def __call__(self, i: int) -> DiscreteMeasure:
        return self.conditionals[i]

    def __eq__(self, other):
        if not isinstance(other, DisintegrationMap):
            return NotImplemented
        return self.base == other.base and self.conditionals == other.conditionals

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "base": measure_to_dict(self.base),
            "conditionals": [measure_to_dict(c) for c in self.conditionals],
        }

    @classmethod
    def from_dict(cls, data) -> "DisintegrationMap":
        for key in ("base", "conditionals"):
            if key not in data:
                raise KeyError(f"disintegration JSON is missing field {key!r}")
        return cls(
            measure_from_dict(data["base"]),
            tuple(measure_from_dict(c) for c in data["conditionals"]),
        )


def disintegrate(plan: TransportPlan) -> DisintegrationMap:
    """Normalize each row of the plan by the mass of its source atom."""
    mu, nu = plan.source, plan.target
    conds = []
    for i in range(len(mu)):
        row = plan.matrix[i] / mu.weights[i]
        keep = row > 0
        if mu.exact:
            conds.append(make_measure(nu.points[keep], row[keep], mode=mu.mode))
        else:
            conds.append(make_measure(nu.points[keep], row[keep], normalize=True))
    return DisintegrationMap(mu, tuple(conds))


def recombine(f: DisintegrationMap, mu: DiscreteMeasure) -> TransportPlan:
    """The plan ``f (x) mu`` with ``P[i, j] = mu_i * f(x_i)({y_j})``."""
    if f.base != mu:
        raise BaseMismatch("disintegration map is based on a different measure")
    check_same_mode(mu, *f.conditionals)
    Y = union_support(*f.conditionals)
    M = np.zeros((len(mu), len(Y)), dtype=object if mu.exact else float)
    if mu.exact:
        M[:] = Fraction(0)
    for i, lam in enumerate(f.conditionals):
        for p, w in zip(lam.points, lam.weights):
            M[i, locate(Y, p)] += mu.weights[i] * w
    target = make_measure(Y, M.sum(axis=0), mode=mu.mode, normalize=not mu.exact)
    return TransportPlan(mu, target, M)


def pushforward_meta(f: DisintegrationMap) -> MetaMeasure:
    """``f_# mu = sum_i mu_i delta_{f(x_i)}`` with equal conditionals merged."""
    return make_meta(f.conditionals, f.base.weights)


def second_marginal(plan: TransportPlan) -> DiscreteMeasure:
    cols = plan.matrix.sum(axis=0)
    keep = cols > 0
    return make_measure(
        plan.target.points[keep], cols[keep], mode=plan.source.mode, normalize=not plan.exact
    )


def classes_equal(gamma: TransportPlan, eta: TransportPlan, tol: float = EPS_META) -> bool:
    """Whether two plans on the same source lie in the same transport class.

    Decided by the nested Wasserstein distance between the push-forwards of
    their disintegration maps: zero in exact arithmetic, at most ``tol``
    otherwise.
    """
    if gamma.source != eta.source:
        raise SourceMismatch("plans have different source measures")
    d = class_distance(gamma, eta)
    if isinstance(d, Fraction):
        return d == 0
    return float(d) <= tol


def class_distance(gamma: TransportPlan, eta: TransportPlan):
    """Nested ``W_1`` between ``f_# mu`` and ``g_# mu``."""
    if gamma.source != eta.source:
        raise SourceMismatch("plans have different source measures")
    return meta_wasserstein(
        pushforward_meta(disintegrate(gamma)), pushforward_meta(disintegrate(eta))
    )


class MapRecovery(NamedTuple):
    map: Optional[tuple]
    splitting_atoms: tuple


def map_from_class_plan(gamma: TransportPlan) -> MapRecovery:
    """Recover ``t`` from ``gamma = (Id x t)_# mu`` when every conditional is a Dirac.

    The recovered target of each atom coincides with the barycenter of its
    conditional; this is checked before returning. Otherwise ``map`` is
    ``None`` and the source atoms whose mass is split are listed.
    """
    f = disintegrate(gamma)
    split = tuple(i for i, lam in enumerate(f.conditionals) if not lam.is_dirac())
    if split:
        return MapRecovery(None, split)
    t = []
    for lam in f.conditionals:
        j = locate(gamma.target.points, lam.points[0])
        centre = barycenter(lam)
        if locate(lam.points, centre) != 0:
            raise AssertionError("Dirac conditional does not sit at its barycenter")
        t.append(j)
    return MapRecovery(tuple(t), ())
