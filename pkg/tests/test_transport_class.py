import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otclass import (
    Euclidean,
    ExplicitMatrix,
    InnerProduct,
    Separable,
    SquaredEuclidean,
    barycenter,
    check_class_constraint,
    class_of_map,
    compare_with_kantorovich,
    diagnose_existence,
    dirac,
    disintegrate,
    generalized_barycenter,
    lifted_cost,
    make_measure,
    make_meta,
    meta_wasserstein,
    pushforward_meta,
    solve_allocation,
    solve_class_problem,
    solve_mk,
    solve_monge_maps,
    wasserstein,
)
from otclass.errors import DimensionMismatch, Infeasible, UnsupportedCostVariant
from otclass.meta import meta_from_dict, meta_to_dict
from otclass.oracle import enumerate_feasible_maps, map_cost
from otclass.sampling import random_class_instance, random_measure, random_meta
from otclass.transport_class import lifted_cost_matrix

R = "rational"
NU = make_measure([0, 1], ["1/6", "5/6"], mode=R)
HALF = make_measure([0, 1], ["1/2", "1/2"], mode=R)
MU3 = make_measure([0, 1, 2], ["1/3"] * 3, mode=R)


def test_class_constraint_examples():
    assert check_class_constraint(make_meta([NU], [1]), NU)
    dirac_class = make_meta([dirac(0, R), dirac(1, R)], ["1/6", "5/6"])
    assert check_class_constraint(dirac_class, NU)
    assert not check_class_constraint(make_meta([dirac(0, R)], [1]), NU)
    with pytest.raises(DimensionMismatch):
        check_class_constraint(make_meta([dirac((0, 0), R)], [1]), NU)


def test_class_constraint_float_tolerance():
    lam = make_meta([make_measure([0.0, 1.0], [0.5, 0.5])], [1.0])
    assert check_class_constraint(lam, make_measure([0.0, 1.0 + 1e-9], [0.5, 0.5]))


def test_generalized_barycenter_examples(plans):
    assert generalized_barycenter(make_meta([HALF], [1])) == HALF
    N = make_meta([dirac(3, R), dirac(5, R)], ["1/2", "1/2"])
    assert generalized_barycenter(N) == make_measure([3, 5], ["1/2", "1/2"], mode=R)
    for plan in plans.values():
        assert generalized_barycenter(pushforward_meta(disintegrate(plan))) == NU


def test_meta_wasserstein_examples(plans, golden):
    rng = np.random.default_rng(0)
    N = random_meta(rng, 3, 4, exact=True)
    assert meta_wasserstein(N, N) == 0
    a, b = random_measure(rng, 3, 1), random_measure(rng, 2, 1)
    assert meta_wasserstein(make_meta([a], [1]), make_meta([b], [1])) == wasserstein(1, a, b)
    _, want = golden("meta_distance_one_vs_two_splits")
    f = pushforward_meta(disintegrate(plans["f"]))
    h = pushforward_meta(disintegrate(plans["h"]))
    d = meta_wasserstein(f, h)
    assert d == want["value"] and d > 0


def test_meta_merges_equal_atoms():
    N = make_meta([HALF, dirac(1, R), HALF], ["1/4", "1/2", "1/4"])
    assert len(N) == 2
    assert N.atoms[0] == dirac(1, R)
    assert meta_from_dict(json.loads(json.dumps(meta_to_dict(N)))) == N


def test_lifted_cost_examples():
    c = SquaredEuclidean()
    assert lifted_cost(c, (1, 2), dirac((4, 6), R)) == 25
    lam = make_measure([(1, 0), (0, 3)], ["1/3", "2/3"], mode=R)
    x = (2, -1)
    b = barycenter(lam)
    assert lifted_cost(InnerProduct(), x, lam) == x[0] * b[0] + x[1] * b[1]
    const = ExplicitMatrix([[4, 4]])
    assert lifted_cost(const, 0, HALF, target=HALF) == 4


def test_class_problem_product_class():
    c = Euclidean(1)
    rep = solve_class_problem(c, MU3, make_meta([NU], [1]))
    expected = sum(a * b * abs(x - y) for x, a in zip([0, 1, 2], MU3.weights)
                   for y, b in zip([0, 1], NU.weights))
    assert rep.feasible_maps_exist
    assert rep.optimal_assignment == (0, 0, 0)
    assert rep.map_value == rep.relaxed_value == rep.plan_value == expected
    assert rep.gap == 0


def test_class_problem_dirac_class_matches_monge():
    rng = np.random.default_rng(3)
    for _ in range(10):
        mu = random_measure(rng, 5, 2, exact=True)
        Y = [tuple(int(v) for v in rng.integers(-5, 6, size=2)) for _ in range(3)]
        s = [Y[int(j)] for j in rng.integers(0, 3, size=5)]
        Lambda = class_of_map(s, mu)
        nu = generalized_barycenter(Lambda)
        rep = solve_class_problem(SquaredEuclidean(), mu, Lambda)
        assert rep.map_value == solve_monge_maps(SquaredEuclidean(), mu, nu).value


def test_class_problem_infeasible_profile(golden):
    _, want = golden("class_infeasible_profile")
    Lambda = make_meta([dirac(0, R), dirac(1, R)], ["1/3", "2/3"])
    rep = solve_class_problem(Euclidean(1), HALF, Lambda)
    assert want["feasible_maps"] == 0
    assert not rep.feasible_maps_exist
    assert rep.map_value == math.inf and rep.optimal_assignment is None
    assert json.loads(json.dumps(rep.to_dict()))["map_value"] == "inf"


def test_compare_with_kantorovich_examples():
    c = Euclidean(1)
    prod = compare_with_kantorovich(c, MU3, make_meta([NU], [1]))
    assert prod.inequality_holds and prod.class_value >= prod.mk_value
    opt = solve_mk(c, MU3, NU).plan
    cmp = compare_with_kantorovich(c, MU3, pushforward_meta(disintegrate(opt)))
    assert cmp.mk_value == cmp.class_value


def test_class_of_map_examples():
    assert class_of_map([(4,)] * 3, MU3) == make_meta([dirac(4, R)], [1])
    N = class_of_map([(0,), (1,), (2,)], MU3)
    assert len(N) == 3 and list(N.weights) == [F(1, 3)] * 3
    assert all(a.is_dirac() for a in N.atoms)


def test_split_class_differs_from_dirac_class(plans):
    # the class of the one-split plan is not the Dirac meta-measure sharing its barycenter
    split = pushforward_meta(disintegrate(plans["f"]))
    dirac_class = make_meta([dirac(0, R), dirac(1, R)], ["1/6", "5/6"])
    assert not all(a.is_dirac() for a in split.atoms)
    assert generalized_barycenter(split) == generalized_barycenter(dirac_class) == NU
    assert meta_wasserstein(split, dirac_class) > 0


def equal_barycenter_instance(golden):
    inst, want = golden("equal_barycenter_inner")
    mu = make_measure(inst["mu_points"], inst["mu_weights"], mode=R)
    lam1 = make_measure([p for p, _ in inst["lambda1"]], [w for _, w in inst["lambda1"]], mode=R)
    lam2 = make_measure([p for p, _ in inst["lambda2"]], [w for _, w in inst["lambda2"]], mode=R)
    return mu, make_meta([lam1, lam2], inst["meta_weights"]), want


def test_equal_barycenters_flagged(golden):
    mu, Lambda, want = equal_barycenter_instance(golden)
    rep = diagnose_existence(InnerProduct(), mu, Lambda)
    (pair,) = rep.pairs
    assert list(pair.discriminant) == want["discriminant"]
    assert pair.flagged and pair.tie_degenerate
    cls = solve_class_problem(InnerProduct(), mu, Lambda)
    assert cls.degeneracy_flags and cls.map_value == want["map_costs"][0]
    assert len(want["map_costs"]) == 1


def test_distinct_barycenters_not_flagged():
    mu = make_measure([(1, 0), (0, 1)], ["1/2", "1/2"], mode=R)
    Lambda = make_meta([dirac((1, 1), R), dirac((2, 0), R)], ["1/2", "1/2"])
    rep = diagnose_existence(InnerProduct(), mu, Lambda)
    assert not any(p.flagged or p.tie_degenerate for p in rep.pairs)


def test_separable_constant_b_flags_every_pair():
    mu = make_measure([0, 1, 2], ["1/3"] * 3, mode=R)
    lams = [dirac(0, R), dirac(1, R), HALF]
    Lambda = make_meta(lams, ["1/3"] * 3)
    nu = generalized_barycenter(Lambda)
    c = Separable([1, 2, 3], [1] * len(nu))
    rep = diagnose_existence(c, mu, Lambda)
    assert len(rep.pairs) == 3
    assert all(p.flagged and p.discriminant == 0 for p in rep.pairs)


def test_closed_form_needs_supported_cost():
    with pytest.raises(UnsupportedCostVariant):
        diagnose_existence(Euclidean(1), MU3, make_meta([NU], [1]))
    assert diagnose_existence(Euclidean(1), MU3, make_meta([NU], [1]), closed_form=False).pairs == []


def test_allocation_dirac_profiles():
    nu = make_measure([0, 1, 2], ["1/6", "1/3", "1/2"], mode=R)
    mu = make_measure([0, 1, 2, 3, 4, 5], ["1/6"] * 6, mode=R)
    res = solve_allocation(Euclidean(1), mu, [dirac(p, R) for p in nu.atoms()], nu)
    assert list(res.blend_weights) == list(nu.weights)
    monge = solve_monge_maps(Euclidean(1), mu, nu)
    assert res.partition == monge.best_map
    assert res.value == monge.value


def test_allocation_single_profile_infeasible():
    with pytest.raises(Infeasible):
        solve_allocation(Euclidean(1), MU3, [HALF], NU)


def test_allocation_split_and_dirac(golden):
    _, want = golden("blend_split_and_dirac")
    res = solve_allocation(Euclidean(1), MU3, [HALF, dirac(1, R)], NU)
    assert list(res.blend_weights) == want["alpha"]
    assert res.exhaustive
    assert sorted(res.partition) == [0, 1, 1]


def test_allocation_picks_cheapest_vertex():
    # three profiles, two exact blends; the cheaper one wins
    nu = make_measure([0, 1], ["1/2", "1/2"], mode=R)
    mu = make_measure([0, 1], ["1/2", "1/2"], mode=R)
    profiles = [dirac(0, R), dirac(1, R), nu]
    res = solve_allocation(Euclidean(1), mu, profiles, nu)
    assert res.candidates == 2
    assert res.value == 0 and res.partition == (0, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_lipschitz_barycenter(seed):
    rng = np.random.default_rng(seed)
    N1 = random_meta(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)), exact=True)
    N2 = random_meta(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)), exact=True)
    lhs = wasserstein(1, generalized_barycenter(N1), generalized_barycenter(N2))
    assert lhs <= meta_wasserstein(N1, N2)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_meta_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (random_meta(rng, 2, 3, exact=True) for _ in range(3))
    ab = meta_wasserstein(A, B)
    assert ab == meta_wasserstein(B, A)
    assert meta_wasserstein(A, C) <= ab + meta_wasserstein(B, C)
    if ab == 0:
        assert A == B


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_two_map_value_routes_agree(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    mu, Lambda, t = random_class_instance(rng, m, int(rng.integers(1, min(m, 3) + 1)), 3)
    rep = solve_class_problem(Euclidean(1), mu, Lambda)
    assert rep.feasible_maps_exist
    assert rep.map_value == rep.plan_value
    assert rep.gap >= 0
    Ct = lifted_cost_matrix(Euclidean(1), mu, Lambda)
    assert rep.map_value <= map_cost(Ct, mu.weights, t)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_feasibility_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, int(rng.integers(1, 6)), 1, exact=True)
    k = int(rng.integers(1, 4))
    lams = []
    while len(lams) < k:
        lam = random_measure(rng, int(rng.integers(1, 3)), 1, exact=True, grid=3)
        if lam not in lams:
            lams.append(lam)
    raw = [int(v) for v in rng.integers(1, 4, size=k)]
    Lambda = make_meta(lams, [F(v, sum(raw)) for v in raw])
    rep = solve_class_problem(Euclidean(1), mu, Lambda, diagnose=False)
    maps = enumerate_feasible_maps(mu, list(Lambda.weights))
    assert rep.feasible_maps_exist == bool(maps)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_comparison_inequality(seed):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, int(rng.integers(1, 6)), 2, exact=False)
    Lambda = random_meta(rng, int(rng.integers(1, 4)), 4, dim=2, exact=False)
    assert compare_with_kantorovich(SquaredEuclidean(), mu, Lambda).inequality_holds


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_discriminant_consistent_with_lifted_cost(seed):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, int(rng.integers(2, 5)), 2, exact=True)
    Lambda = random_meta(rng, int(rng.integers(2, 4)), 3, dim=2, exact=True)
    pts = mu.points.astype(float)
    spans = np.linalg.matrix_rank(pts[1:] - pts[0]) == 2
    for p in diagnose_existence(InnerProduct(), mu, Lambda).pairs:
        # zero discriminant forces constancy; an affinely spanning mu gives the converse
        if p.flagged:
            assert p.tie_degenerate
        elif spans:
            assert not p.tie_degenerate
