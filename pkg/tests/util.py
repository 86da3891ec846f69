"""Shared test helpers."""

import numpy as np

from koed.core import UncertaintyClass, all_pairs, pair_index


def permute_class(uclass: UncertaintyClass, perm) -> UncertaintyClass:
    """Relabel oscillators by perm (perm[old] = new, 0-based) and remap the
    pair-ordered bound vectors accordingly."""
    n = uclass.n
    omegas = np.empty(n)
    for old in range(n):
        omegas[perm[old]] = uclass.omegas[old]
    lower = np.empty_like(uclass.lower)
    upper = np.empty_like(uclass.upper)
    for k, (i, j) in enumerate(all_pairs(n)):
        ni, nj = perm[i - 1] + 1, perm[j - 1] + 1
        if ni > nj:
            ni, nj = nj, ni
        nk = pair_index(ni, nj, n)
        lower[nk] = uclass.lower[k]
        upper[nk] = uclass.upper[k]
    return UncertaintyClass(n, omegas, lower, upper)


def random_class(n: int, rng: np.random.Generator,
                 width_scale: float = 0.4) -> UncertaintyClass:
    """A moderate random uncertainty class (not the dataset profile)."""
    p = n * (n - 1) // 2
    omegas = rng.uniform(-3.0, 3.0, size=n)
    lower = rng.uniform(0.0, 1.5, size=p)
    upper = lower + rng.uniform(0.0, width_scale, size=p)
    return UncertaintyClass(n, omegas, lower, upper)
