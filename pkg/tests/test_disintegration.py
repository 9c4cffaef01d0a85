from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otclass import (
    DisintegrationMap,
    Euclidean,
    classes_equal,
    dirac,
    disintegrate,
    make_measure,
    make_plan,
    map_from_class_plan,
    map_plan,
    product_plan,
    pushforward_by_index_map,
    pushforward_meta,
    recombine,
    second_marginal,
    solve_mk,
)
from otclass.disintegration import class_distance
from otclass.errors import BaseMismatch, SourceMismatch
from otclass.meta import make_meta
from otclass.sampling import random_measure

R = "rational"
NU = make_measure([0, 1], ["1/6", "5/6"], mode=R)


def random_plan(rng, m, n, exact=True):
    mu = random_measure(rng, m, 1, exact)
    nu = random_measure(rng, n, 1, exact)
    return solve_mk(Euclidean(1), mu, nu).plan


def test_map_plan_gives_dirac_conditionals():
    mu = make_measure([0, 1, 2], ["1/3"] * 3, mode=R)
    img = make_measure([0, 1], ["1/3", "2/3"], mode=R)
    f = disintegrate(map_plan(mu, img, [0, 1, 1]))
    assert [c.is_dirac() for c in f.conditionals] == [True] * 3
    assert f(0) == dirac(0, mode=R)


def test_product_plan_gives_constant_conditionals():
    mu = make_measure([0, 1, 2], ["1/3"] * 3, mode=R)
    f = disintegrate(product_plan(mu, NU))
    assert all(c == NU for c in f.conditionals)
    assert pushforward_meta(f) == make_meta([NU], [1])


def test_conditionals_of_one_split(plans):
    f = disintegrate(plans["f"])
    assert f(0) == make_measure([0, 1], ["1/2", "1/2"], mode=R)
    assert f(1) == f(2) == dirac(1, mode=R)


def test_pushforward_of_one_split(plans):
    meta = pushforward_meta(disintegrate(plans["f"]))
    assert len(meta) == 2
    assert meta.atoms[0] == dirac(1, mode=R)
    assert meta.atoms[1] == make_measure([0, 1], ["1/2", "1/2"], mode=R)
    assert list(meta.weights) == [F(2, 3), F(1, 3)]


def test_classes_of_example_plans(plans):
    assert classes_equal(plans["f"], plans["g"])
    assert not classes_equal(plans["f"], plans["h"])
    assert not classes_equal(plans["h"], plans["k"])
    assert not classes_equal(plans["f"], plans["k"])


def test_second_marginals_of_example_plans(plans):
    for plan in plans.values():
        assert second_marginal(plan) == NU


def test_splitting_atom_reported(plans):
    rec = map_from_class_plan(plans["f"])
    assert rec.map is None
    assert rec.splitting_atoms == (0,)
    assert map_from_class_plan(plans["h"]).splitting_atoms == (0, 1)


def test_map_recovered_from_map_plan():
    rng = np.random.default_rng(0)
    mu = random_measure(rng, 5, 2, exact=True)
    nu = random_measure(rng, 3, 2, exact=True)
    t = (2, 0, 1, 1, 0)
    img = pushforward_by_index_map(mu, [nu.atom(j) for j in t])
    plan = map_plan(mu, img, [img.atoms().index(nu.atom(j)) for j in t])
    rec = map_from_class_plan(plan)
    assert [img.atom(j) for j in rec.map] == [nu.atom(j) for j in t]


def test_map_recovered_after_merging_near_atoms():
    # two target columns closer than the geometric tolerance become one atom
    plan = make_plan([0.0, 1.0], [5.0, 5.0 + 1e-14, 7.0], [[0.25, 0.25, 0.0], [0.0, 0.0, 0.5]])
    rec = map_from_class_plan(plan)
    assert rec.map == (0, 1)
    assert rec.splitting_atoms == ()


def test_recombine_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(20):
        plan = random_plan(rng, 4, 3)
        back = recombine(disintegrate(plan), plan.source)
        assert back.source == plan.source
        assert second_marginal(back) == second_marginal(plan)
        # recombine works over the union of conditional supports
        cols = [plan.target.atoms().index(p) for p in back.target.atoms()]
        assert np.array_equal(back.matrix, plan.matrix[:, cols])
        assert np.all(np.delete(plan.matrix, cols, axis=1) == 0)


def test_recombine_float_round_trip():
    rng = np.random.default_rng(2)
    plan = random_plan(rng, 5, 4, exact=False)
    back = recombine(disintegrate(plan), plan.source)
    cols = [plan.target.atoms().index(p) for p in back.target.atoms()]
    assert np.allclose(back.matrix, plan.matrix[:, cols], atol=1e-9)


def test_recombine_base_mismatch():
    mu = make_measure([0, 1], ["1/2", "1/2"], mode=R)
    f = disintegrate(product_plan(mu, NU))
    with pytest.raises(BaseMismatch):
        recombine(f, make_measure([0, 2], ["1/2", "1/2"], mode=R))


def test_source_mismatch():
    a = product_plan(make_measure([0, 1], ["1/2", "1/2"], mode=R), NU)
    b = product_plan(dirac(0, mode=R), NU)
    with pytest.raises(SourceMismatch):
        classes_equal(a, b)


def test_disintegration_json_round_trip(plans):
    f = disintegrate(plans["h"])
    assert DisintegrationMap.from_dict(f.to_dict()) == f


def test_converse_counterexample():
    # same second marginal, different classes
    mu = make_measure([0, 1], ["1/2", "1/2"], mode=R)
    nu = make_measure([0, 1], ["1/2", "1/2"], mode=R)
    gamma, eta = product_plan(mu, nu), map_plan(mu, nu, [0, 1])
    assert second_marginal(gamma) == second_marginal(eta)
    assert not classes_equal(gamma, eta)
    assert class_distance(gamma, eta) == F(1, 2)


def permute_within_weights(rng, plan):
    """A plan in the same class: conditionals shuffled among equal-mass atoms."""
    f = disintegrate(plan)
    mu = plan.source
    order = list(range(len(mu)))
    for w in set(mu.weights):
        group = [i for i in range(len(mu)) if mu.weights[i] == w]
        for i, j in zip(group, rng.permutation(group)):
            order[i] = int(j)
    g = DisintegrationMap(mu, tuple(f.conditionals[k] for k in order))
    return recombine(g, mu)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_same_class_implies_same_second_marginal(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    mu = make_measure(range(m), [F(1, m)] * m, mode=R)
    nu = random_measure(rng, int(rng.integers(1, 4)), 1, exact=True)
    plan = solve_mk(Euclidean(2), mu, nu).plan
    other = permute_within_weights(rng, plan)
    assert classes_equal(plan, other)
    assert second_marginal(plan) == second_marginal(other)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_map_classes_match_image_measures(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 6)), int(rng.integers(1, 4))
    mu = random_measure(rng, m, 1, exact=True)
    Y = [(int(v),) for v in rng.choice(20, size=n, replace=False)]
    t = [int(v) for v in rng.integers(0, n, size=m)]
    s = [int(v) for v in rng.integers(0, n, size=m)]
    nu_t = pushforward_by_index_map(mu, [Y[j] for j in t])
    nu_s = pushforward_by_index_map(mu, [Y[j] for j in s])
    gt = map_plan(mu, nu_t, [nu_t.atoms().index(Y[j]) for j in t])
    gs = map_plan(mu, nu_s, [nu_s.atoms().index(Y[j]) for j in s])
    assert classes_equal(gt, gs) == (nu_t == nu_s)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_class_relation_is_equivalence(seed):
    rng = np.random.default_rng(seed)
    mu = make_measure([0, 1, 2, 3], ["1/4"] * 4, mode=R)
    nus = [random_measure(rng, 2, 1, exact=True) for _ in range(2)]
    p1 = solve_mk(Euclidean(1), mu, nus[0]).plan
    p2 = permute_within_weights(rng, p1)
    p3 = solve_mk(Euclidean(1), mu, nus[1]).plan
    trio = [p1, p2, p3]
    for a in trio:
        assert classes_equal(a, a)
        for b in trio:
            assert classes_equal(a, b) == classes_equal(b, a)
            for c in trio:
                if classes_equal(a, b) and classes_equal(b, c):
                    assert classes_equal(a, c)


def test_float_transitivity_with_doubled_tolerance():
    rng = np.random.default_rng(5)
    mu = make_measure([0, 1, 2], [1 / 3] * 3)
    nu = random_measure(rng, 2, 1, exact=False)
    p1 = solve_mk(Euclidean(1), mu, nu).plan
    p2 = permute_within_weights(rng, p1)
    p3 = permute_within_weights(rng, p2)
    assert float(class_distance(p1, p3)) <= float(class_distance(p1, p2)) + float(class_distance(p2, p3)) + 2e-7
