"""Random instance generators for property checks.

All generators take a :class:`numpy.random.Generator` so that runs are
reproducible from a seed.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .measure import make_measure
from .meta import make_meta


def random_weights(rng, k: int, exact: bool, max_int: int = 6):
    raw = [int(v) for v in rng.integers(1, max_int + 1, size=k)]
    total = sum(raw)
    if exact:
        return [Fraction(v, total) for v in raw]
    w = np.asarray(raw, dtype=float)
    return list(w / w.sum())


def random_points(rng, k: int, dim: int, exact: bool, grid: int = 10):
    """Distinct points; integer grid coordinates in exact mode."""
    while True:
        if exact:
            pts = [tuple(int(v) for v in rng.integers(-grid, grid + 1, size=dim)) for _ in range(k)]
        else:
            pts = [tuple(rng.uniform(-grid, grid, size=dim)) for _ in range(k)]
        if len(set(pts)) == k:
            return pts


def random_measure(rng, k: int, dim: int = 1, exact: bool = True, grid: int = 10):
    mode = "rational" if exact else "float"
    pts = random_points(rng, k, dim, exact, grid)
    return make_measure(pts, random_weights(rng, k, exact), mode=mode)


def random_meta(rng, n_atoms: int, n_points: int, dim: int = 1, exact: bool = True):
    """A meta-measure whose atoms are random measures on a shared point pool."""
    mode = "rational" if exact else "float"
    pool = random_points(rng, n_points, dim, exact)
    atoms = []
    for _ in range(n_atoms):
        k = int(rng.integers(1, n_points + 1))
        idx = sorted(rng.choice(n_points, size=k, replace=False))
        atoms.append(
            make_measure([pool[i] for i in idx], random_weights(rng, k, exact), mode=mode)
        )
    return make_meta(atoms, random_weights(rng, n_atoms, exact))


def random_class_instance(rng, m: int, k: int, n_points: int, dim: int = 1, exact: bool = True):
    """``(mu, Lambda, t)`` where the assignment ``t`` realizes ``Lambda``.

    Every meta-atom receives at least one source atom, so feasible maps exist
    by construction.
    """
    mode = "rational" if exact else "float"
    mu = random_measure(rng, m, dim, exact)
    t = list(rng.permutation(np.arange(m) % k))
    pool = random_points(rng, n_points, dim, exact)
    atoms = []
    while len(atoms) < k:
        size = int(rng.integers(1, n_points + 1))
        idx = sorted(rng.choice(n_points, size=size, replace=False))
        lam = make_measure([pool[i] for i in idx], random_weights(rng, size, exact), mode=mode)
        if lam not in atoms:
            atoms.append(lam)
    weights = [Fraction(0) if exact else 0.0] * k
    for i, j in enumerate(t):
        weights[j] += mu.weights[i]
    Lambda = make_meta(atoms, weights)
    where = [Lambda.atoms.index(lam) for lam in atoms]
    return mu, Lambda, [where[int(j)] for j in t]
