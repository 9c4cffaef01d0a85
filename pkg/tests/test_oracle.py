import ast
import inspect
from fractions import Fraction as F

import numpy as np
import pytest

from otclass import SquaredEuclidean, make_measure, oracle
from otclass.errors import BudgetExceeded
from otclass.oracle import (
    EnumerationBudget,
    _spanning_trees,
    enumerate_basic_feasible,
    enumerate_feasible_maps,
    exhaustive_cycle_search,
    oracle_minimum,
    read_fixture,
    write_fixture,
)
from otclass.solver import TransportationInstance

R = "rational"


@pytest.mark.parametrize("m,n", [(1, 1), (2, 2), (2, 3), (3, 3), (3, 4)])
def test_spanning_tree_count(m, n):
    # K_{m,n} has m^(n-1) n^(m-1) spanning trees
    assert sum(1 for _ in _spanning_trees(m, n)) == m ** (n - 1) * n ** (m - 1)


def test_single_vertex():
    (vertex,) = enumerate_basic_feasible(TransportationInstance([F(1)], [F(1)], [[3]]))
    assert vertex[0].tolist() == [[1]] and vertex[1] == 3


def test_two_by_two_uniform(golden):
    _, want = golden("vertices_2x2_uniform")
    half = [F(1, 2)] * 2
    verts = enumerate_basic_feasible(TransportationInstance(half, half, [[0, 1], [1, 0]]))
    assert sorted(P.ravel().tolist() for P, _ in verts) == want["vertices"]
    # only the two permutation couplings survive deduplication
    assert len(verts) == 2


def test_float_vertices():
    verts = enumerate_basic_feasible(TransportationInstance([0.3, 0.7], [0.5, 0.5], [[1.0, 2.0], [3.0, 1.0]]))
    assert min(obj for _, obj in verts) == pytest.approx(0.3 + 0.2 * 3 + 0.5)


def test_vertex_budget():
    inst = TransportationInstance([F(1, 3)] * 3, [F(1, 3)] * 3, np.zeros((3, 3), dtype=int).tolist())
    with pytest.raises(BudgetExceeded):
        enumerate_basic_feasible(inst, EnumerationBudget(max_vertices=5))
    big = TransportationInstance([1 / 6] * 6, [1.0], np.zeros((6, 1)))
    with pytest.raises(BudgetExceeded):
        oracle_minimum(big)


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        EnumerationBudget(max_atoms=0)


def test_map_counts(golden):
    _, want = golden("map_counts")
    two = make_measure([0, 1], ["1/2", "1/2"], mode=R)
    three = make_measure([0, 1, 2], ["1/3"] * 3, mode=R)
    got = [
        len(enumerate_feasible_maps(two, [F(1, 2), F(1, 2)])),
        len(enumerate_feasible_maps(two, [F(1, 3), F(2, 3)])),
        len(enumerate_feasible_maps(three, [F(1, 3), F(2, 3)])),
    ]
    assert got == want["counts"] == [2, 0, 3]


def test_map_budget():
    mu = make_measure(range(11), [1 / 11] * 11, normalize=True)
    with pytest.raises(BudgetExceeded):
        enumerate_feasible_maps(mu, [1.0])
    mu = make_measure(range(8), [1 / 8] * 8)
    with pytest.raises(BudgetExceeded):
        enumerate_feasible_maps(mu, [1 / 8] * 8, EnumerationBudget(max_maps=1000))


def test_cycle_search(golden):
    inst, want = golden("two_swap")
    pairs = [tuple(map(tuple, p)) for p in inst["pairs"]]
    found = exhaustive_cycle_search(SquaredEuclidean(), pairs, 2)
    assert [[list(s), list(p)] for s, p in found] == want["witnesses"]
    assert exhaustive_cycle_search(SquaredEuclidean(), pairs, 1) == []
    with pytest.raises(BudgetExceeded):
        exhaustive_cycle_search(SquaredEuclidean(), pairs * 5, 2)


def test_fixture_round_trip(tmp_path):
    path = write_fixture(tmp_path, "demo", {"w": [F(1, 3)]}, {"v": 2.5})
    rec = read_fixture(path)
    assert rec == {"derived_example_id": "demo", "instance": {"w": ["1/3"]}, "oracle_result": {"v": 2.5}}


def test_oracle_shares_no_production_logic():
    tree = ast.parse(inspect.getsource(oracle))
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module)
    assert "solver" not in imported and "kantorovich" not in imported
    assert "transport_class" not in imported
