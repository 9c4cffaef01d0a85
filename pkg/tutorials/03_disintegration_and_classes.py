"""Disintegrating plans and comparing transport classes.

A plan gamma with first marginal mu splits into conditionals x -> gamma_x.
Pushing mu forward through that map gives a measure on measures, and two
plans are in the same class when these coincide. Plans in one class share
their second marginal, but the converse fails.
"""

from otclass import (
    classes_equal,
    disintegrate,
    make_measure,
    make_plan,
    map_plan,
    meta_wasserstein,
    product_plan,
    pushforward_meta,
    second_marginal,
)

# four plans from three equal atoms at 0, 1, 2 to targets 0 and 1
rows = {
    "f": [["1/6", "1/6"], [0, "1/3"], [0, "1/3"]],
    "g": [[0, "1/3"], ["1/6", "1/6"], [0, "1/3"]],
    "h": [["3/30", "7/30"], ["2/30", "8/30"], [0, "1/3"]],
    "k": [["1/30", "9/30"], ["4/30", "6/30"], [0, "1/3"]],
}
plans = {name: make_plan([0, 1, 2], [0, 1], r, mode="rational") for name, r in rows.items()}

for name, plan in plans.items():
    print(f"{name}: second marginal {second_marginal(plan)}")

f = disintegrate(plans["f"])
print("conditionals of f:")
for i in range(3):
    print("  ", f(i))
print("class of f:", pushforward_meta(f))

# f and g split different source atoms the same way, so they share a class
names = list(plans)
for a in range(4):
    for b in range(a + 1, 4):
        p, q = names[a], names[b]
        verdict = "same class" if classes_equal(plans[p], plans[q]) else "different"
        dist = meta_wasserstein(pushforward_meta(disintegrate(plans[p])),
                                pushforward_meta(disintegrate(plans[q])))
        print(f"{p} vs {q}: {verdict}, class distance {dist}")

# equal second marginals do not imply the same class
half = make_measure([0, 1], ["1/2", "1/2"], mode="rational")
prod, ident = product_plan(half, half), map_plan(half, half, [0, 1])
print("product vs identity: marginals equal",
      second_marginal(prod) == second_marginal(ident),
      "| same class", classes_equal(prod, ident))
