"""Transport restricted to a class, existence diagnostics and allocation.

Fix a source mu and a class Lambda, a measure on measures whose weighted
average is the target. The class problem assigns each atom of mu one atom of
Lambda, paying the lifted cost c(x, lambda) = integral of c(x, y) dlambda(y).
Its linear relaxation is a transportation problem between mu and Lambda.
"""

from otclass import (
    InnerProduct,
    SquaredEuclidean,
    class_of_map,
    compare_with_kantorovich,
    diagnose_existence,
    make_measure,
    make_meta,
    solve_allocation,
    solve_class_problem,
    solve_monge_maps,
)

R = "rational"
mu = make_measure([0, 1, 2], ["1/3"] * 3, mode=R)
split = make_measure([0, 1], ["1/2", "1/2"], mode=R)
point = make_measure([1], ["1"], mode=R)
Lambda = make_meta([point, split], ["2/3", "1/3"])

rep = solve_class_problem(SquaredEuclidean(), mu, Lambda)
print("relaxed value:", rep.relaxed_value)
print("best assignment value:", rep.map_value, "via", rep.optimal_assignment)
print("integral over the induced plan:", rep.plan_value)

cmp = compare_with_kantorovich(SquaredEuclidean(), mu, Lambda)
print(f"unconstrained MK {cmp.mk_value} <= class value {cmp.class_value}: {cmp.inequality_holds}")

# a class made of Diracs recovers the Monge problem
targets = [(0,), (1,), (1,)]
nu = make_measure([0, 1], ["1/3", "2/3"], mode=R)
print("Dirac class value:", solve_class_problem(SquaredEuclidean(), mu, class_of_map(targets, mu)).map_value,
      "| Monge value:", solve_monge_maps(SquaredEuclidean(), mu, nu).value)

# under the inner product two class atoms with the same mean tie on every atom
pts = [(1, 0), (0, 1), (-1, 2), (2, -1)]
mu2 = make_measure(pts, ["1/4"] * 4, mode=R)
lam1 = make_measure([(1, 0), (-1, 0)], ["1/2", "1/2"], mode=R)
lam2 = make_measure([(0, 0)], ["1"], mode=R)
for pair in diagnose_existence(InnerProduct(), mu2, make_meta([lam1, lam2], ["1/2", "1/2"])).pairs:
    disc = ", ".join(str(v) for v in pair.discriminant)
    print(f"atoms {pair.i},{pair.j}: discriminant ({disc}), flagged {pair.flagged}")

# choose blend weights over candidate conditionals that reproduce the target
target = make_measure([0, 1], ["1/6", "5/6"], mode=R)
alloc = solve_allocation(SquaredEuclidean(), mu, [split, point], target)
print("blend weights:", [str(a) for a in alloc.blend_weights])
print("profile per source atom:", alloc.partition, "value", alloc.value)
