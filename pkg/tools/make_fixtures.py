"""Regenerate the golden fixtures under fixtures/ from the brute-force oracle.

Run from the repository root::

    python3 tools/make_fixtures.py

Only the oracle module and plain arithmetic are used here, never the
production solvers, so the stored answers are independent of the code they
test.
"""

from fractions import Fraction as F
from pathlib import Path

import numpy as np

from otclass.measure import SquaredEuclidean, make_measure
from otclass.oracle import (
    enumerate_basic_feasible,
    enumerate_feasible_maps,
    exhaustive_cycle_search,
    map_cost,
    oracle_minimum,
    write_fixture,
)
from otclass.solver import TransportationInstance

ROOT = Path(__file__).resolve().parents[1] / "fixtures"
THIRD = [F(1, 3)] * 3
NU = [F(1, 6), F(5, 6)]


def frac_matrix(rows):
    return np.array([[F(v) for v in r] for r in rows], dtype=object)


def w1_line(p, q):
    """W1 between measures on {0, 1}: the mass that has to cross."""
    return abs(p[0] - q[0])


def main():
    # weighted mean of 1/6 at (0,0) and 5/6 at (6,0)
    mean = [F(1, 6) * 0 + F(5, 6) * 6, F(0)]
    write_fixture(ROOT, "barycenter_two_atoms",
                  {"points": [[0, 0], [6, 0]], "weights": NU}, {"barycenter": mean})

    # image of uniform mu under x1 -> y1, x2, x3 -> y2
    image = {"y1": F(1, 3), "y2": F(1, 3) + F(1, 3)}
    write_fixture(ROOT, "pushforward_split",
                  {"weights": THIRD, "map": ["y1", "y2", "y2"]}, image)

    write_fixture(ROOT, "inner_product_value",
                  {"x": [1, 2], "y": [3, -1]}, {"value": 1 * 3 + 2 * -1})

    # Kantorovich values on the three-atom marginals
    for name, rows in [
        ("transport_index_distance", [[abs(i - j) for j in range(2)] for i in range(3)]),
        ("transport_explicit_matrix", [[4, 1], [2, 3], [5, 0]]),
    ]:
        inst = TransportationInstance(THIRD, NU, frac_matrix(rows))
        write_fixture(ROOT, name, {"supply": THIRD, "demand": NU, "cost": rows},
                      {"minimum": oracle_minimum(inst)})

    # 2x2 uniform vertices
    half = [F(1, 2)] * 2
    verts = enumerate_basic_feasible(TransportationInstance(half, half, frac_matrix([[0, 1], [1, 0]])))
    write_fixture(ROOT, "vertices_2x2_uniform", {"supply": half, "demand": half},
                  {"vertices": sorted([P.ravel().tolist() for P, _ in verts])})

    # W1 moving 1/6 across unit distance
    write_fixture(ROOT, "w1_one_sixth", {"nu": NU, "target": [0, 1]},
                  {"value": w1_line(NU, [F(0), F(1)])})

    # Monge over maps on three uniform atoms, targets 1/3 at 0 and 2/3 at 1
    mu = make_measure([0, 1, 2], THIRD, mode="rational")
    C = frac_matrix([[abs(x - y) for y in (0, 1)] for x in (0, 1, 2)])
    maps = enumerate_feasible_maps(mu, [F(1, 3), F(2, 3)])
    costs = {m: map_cost(C, mu.weights, m) for m in maps}
    best = min(costs.values())
    write_fixture(ROOT, "monge_three_atoms",
                  {"mu_points": [0, 1, 2], "nu_points": [0, 1], "nu_weights": [F(1, 3), F(2, 3)]},
                  {"feasible_maps": [list(m) for m in maps],
                   "best_map": list(min(m for m in maps if costs[m] == best)),
                   "value": best,
                   "kantorovich": oracle_minimum(TransportationInstance(THIRD, [F(1, 3), F(2, 3)], C))})

    # map counts
    two = make_measure([0, 1], half, mode="rational")
    write_fixture(ROOT, "map_counts",
                  {"cases": ["2 atoms -> (1/2,1/2)", "2 atoms -> (1/3,2/3)", "3 atoms -> (1/3,2/3)"]},
                  {"counts": [len(enumerate_feasible_maps(two, half)),
                              len(enumerate_feasible_maps(two, [F(1, 3), F(2, 3)])),
                              len(maps)]})

    # swapped pairs on the line under squared distance
    pairs = [((0,), (1,)), ((1,), (0,))]
    write_fixture(ROOT, "two_swap", {"pairs": pairs},
                  {"witnesses": [[list(s), list(p)] for s, p in
                                 exhaustive_cycle_search(SquaredEuclidean(), pairs, 2)]})

    # nested distance between the one-split and two-split classes
    f_atoms = [(F(0), F(1)), (F(1, 2), F(1, 2))]
    f_w = [F(2, 3), F(1, 3)]
    h_atoms = [(F(0), F(1)), (F(1, 5), F(4, 5)), (F(3, 10), F(7, 10))]
    h_w = THIRD
    ground = frac_matrix([[w1_line(a, b) for b in h_atoms] for a in f_atoms])
    write_fixture(ROOT, "meta_distance_one_vs_two_splits",
                  {"f": {"atoms": f_atoms, "weights": f_w}, "h": {"atoms": h_atoms, "weights": h_w}},
                  {"value": oracle_minimum(TransportationInstance(f_w, h_w, ground))})

    # product plan against the identity map on two half atoms: same second
    # marginal, but conditionals (1/2, 1/2) versus two Diracs
    prod_atom = (F(1, 2), F(1, 2))
    ground = frac_matrix([[w1_line(prod_atom, d) for d in [(F(1), F(0)), (F(0), F(1))]]])
    write_fixture(ROOT, "converse_counterexample",
                  {"mu": {"points": [0, 1], "weights": half},
                   "nu": {"points": [0, 1], "weights": half},
                   "map": [0, 1]},
                  {"second_marginals_equal": True,
                   "class_distance": oracle_minimum(TransportationInstance([F(1)], half, ground))})

    # class problem with unreachable weight profile
    write_fixture(ROOT, "class_infeasible_profile", {"mu": half, "targets": [F(1, 3), F(2, 3)]},
                  {"feasible_maps": len(enumerate_feasible_maps(two, [F(1, 3), F(2, 3)]))})

    # equal-barycenter instance under the inner product
    pts = [(1, 0), (0, 1), (-1, 2), (2, -1)]
    quarter = make_measure(pts, [F(1, 4)] * 4, mode="rational")
    lam1 = [((1, 0), F(1, 2)), ((-1, 0), F(1, 2))]
    lam2 = [((0, 0), F(1))]

    def lifted(x, lam):
        return sum(w * (x[0] * y[0] + x[1] * y[1]) for y, w in lam)

    L = np.array([[lifted(x, lam) for lam in (lam1, lam2)] for x in quarter.atoms()], dtype=object)
    tie_maps = enumerate_feasible_maps(quarter, [F(1, 2), F(1, 2)])
    write_fixture(ROOT, "equal_barycenter_inner",
                  {"mu_points": [list(p) for p in quarter.atoms()], "mu_weights": [F(1, 4)] * 4,
                   "lambda1": [[list(y), w] for y, w in lam1], "lambda2": [[list(y), w] for y, w in lam2],
                   "meta_weights": half},
                  {"map_costs": sorted({map_cost(L, quarter.weights, t) for t in tie_maps}),
                   "n_maps": len(tie_maps), "discriminant": [F(0), F(0)]})

    # blend of a split profile and a Dirac reproducing nu: alpha_1 / 2 = 1/6
    a1 = F(1, 6) / F(1, 2)
    write_fixture(ROOT, "blend_split_and_dirac",
                  {"profiles": [[[0, F(1, 2)], [1, F(1, 2)]], [[1, F(1)]]], "nu": NU},
                  {"alpha": [a1, 1 - a1]})

    # blending feasibility: a + c = 1/6 with b + d = 5/6
    write_fixture(ROOT, "blend_lp_feasible",
                  {"A": [[1, 0, 1, 0], [0, 1, 0, 1]], "b": [F(1, 6), F(5, 6)]},
                  {"feasible": True})
    print(f"fixtures written to {ROOT}")


if __name__ == "__main__":
    main()
