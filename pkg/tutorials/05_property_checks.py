"""Randomized invariant checks.

Each suite draws random instances from a seeded generator and reports the
worst violation found. The same suites back the ``otclass check`` command.
"""

import numpy as np

from otclass import Separable, check_twist
from otclass.checks import SUITES, run_suite
from otclass.sampling import random_meta

for name in SUITES:
    res = run_suite(name, trials=50, seed=1)
    print(f"{name:22s} trials={res.trials} max_violation={res.max_violation:.2e} passed={res.passed}")

# a separable cost whose derivative is flat on half the line fails the twist
# test there: y -> d/dx c(x, y) stops separating targets
flat_left = Separable(lambda x: 0.0 if x[0] <= 0 else x[0] ** 2, lambda y: y[0])
bad = check_twist(flat_left, [(-1.0,), (-0.5,), (0.5,), (1.0,)], [((1.0,), (2.0,))])
print("twist violations at grid points:", sorted(v.point_index for v in bad))

# the generators are plain functions of a numpy Generator
rng = np.random.default_rng(7)
print(random_meta(rng, 2, 3, dim=1, exact=True))
