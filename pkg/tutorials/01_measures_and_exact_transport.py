"""Discrete measures, costs and the exact transportation solver.

Measures live either in float mode (numpy float64 weights) or in rational
mode (Fraction weights), and the network simplex solver works in both. In
rational mode every reported number is exact.
"""

import numpy as np

from otclass import (
    Euclidean,
    TransportationInstance,
    barycenter,
    cost_matrix,
    make_measure,
    pushforward_by_index_map,
    solve_transportation,
)

# three equal atoms on the line and a two-atom target
mu = make_measure([0, 1, 2], ["1/3", "1/3", "1/3"], mode="rational")
nu = make_measure([0, 1], ["1/6", "5/6"], mode="rational")
print("mu:", mu)
print("barycenter of nu:", barycenter(nu))

# sending x1 to 0 and the other two atoms to 1 gives masses 1/3 and 2/3
image = pushforward_by_index_map(mu, [(0,), (1,), (1,)])
print("push-forward of mu:", image)

# exact transportation problem on the distance matrix
C = cost_matrix(Euclidean(1), mu, nu)
inst = TransportationInstance(mu.weights, nu.weights, C)
sol = solve_transportation(inst)
print("optimal cost:", sol.objective, "(type", type(sol.objective).__name__ + ")")
print("optimal plan:\n", sol.plan)
print("dual objective:", sol.dual_objective(inst))

# a float instance solved with the perturbation rule
rng = np.random.default_rng(0)
a = rng.random(6)
b = rng.random(4)
inst = TransportationInstance(a / a.sum(), b / b.sum(), rng.uniform(0, 5, size=(6, 4)))
sol = solve_transportation(inst, rule="strong")
gap = abs(sol.objective - sol.dual_objective(inst))
print(f"float instance: cost {sol.objective:.6f}, duality gap {gap:.1e}")
