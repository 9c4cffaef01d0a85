"""Kantorovich duality, c-transforms and the Monge problem over maps.

The optimal plan comes with dual potentials. On the line, W1 has a
1-Lipschitz potential certifying the value, and the support of any optimal
plan is c-cyclically monotone. Restricting to plans induced by maps gives
the Monge value, which can only be larger.
"""

from otclass import (
    Euclidean,
    SquaredEuclidean,
    c_transform,
    check_cyclical_monotonicity,
    dual_check_w1,
    lipschitz_potential,
    make_measure,
    solve_mk,
    solve_monge_maps,
    wasserstein,
)



def show(values):
    return "[" + ", ".join(str(v) for v in values) + "]"


mu = make_measure([0, 1, 2], ["1/3"] * 3, mode="rational")
nu = make_measure([0, 1], ["1/6", "5/6"], mode="rational")

res = solve_mk(Euclidean(1), mu, nu)
print("MK value:", res.value)
print("source potential:", show(res.source_potential.values))
print("target potential:", show(res.target_potential.values))

# the c-transform of the target potential is at least as good as the source one
phi = c_transform(Euclidean(1), res.target_potential, mu.atoms(), direction="y->x")
print("c-transform of target potential:", show(phi.values))

# a single 1-Lipschitz function certifies W1
phi = lipschitz_potential(mu, nu)
chk = dual_check_w1(mu, nu, phi)
print(f"W1 = {wasserstein(1, mu, nu)}, certified lower bound {chk.lower_bound}, 1-Lipschitz: {chk.is_lip1}")

# optimal supports never admit a cheaper cyclic reassignment
plan = solve_mk(SquaredEuclidean(), mu, nu).plan
cyc = check_cyclical_monotonicity(SquaredEuclidean(), plan.support_points(), 3)
print("support pairs:", [f"{x[0]}->{y[0]}" for x, y in plan.support_points()])
print("cyclically monotone:", cyc.monotone)

# Monge: every atom of mu goes to a single target
target = make_measure([0, 1], ["1/3", "2/3"], mode="rational")
monge = solve_monge_maps(Euclidean(1), mu, target)
print(f"best map {monge.best_map}, Monge value {monge.value}, "
      f"Kantorovich value {monge.kantorovich_value}, gap {monge.gap}")

# with weights no map can reproduce, the Monge problem is infeasible
monge = solve_monge_maps(Euclidean(1), mu, nu)
print("Monge value for 1/6, 5/6 target:", monge.value)
