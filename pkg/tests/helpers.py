"""Shared test oracles and fixture builders.

Everything here is brute force on purpose: oracles must stay independent of
the code paths they check.
"""

import random

from pretopo import (
    ElementSet,
    FilterSpace,
    GraphSpace,
    NeighborhoodBasis,
    PrefilterSpace,
    Universe,
)


def brute_force_closure(space, a):
    """Smallest fixed set containing ``a``: enumerate all subsets, keep the
    fixed points that contain ``a``, intersect them."""
    n = space.size
    full = (1 << n) - 1
    result = full
    found = False
    for mask in range(1 << n):
        s = ElementSet(n, mask)
        if a.mask & ~mask == 0 and space.pseudoclosure(s).mask == mask:
            result &= mask
            found = True
    assert found, "the universe itself must be a fixed point"
    return ElementSet(n, result)


def brute_force_pseudoclosure_prefilter(basis_masks, a_mask, n):
    """Direct per-element evaluation: x joins when every basis set meets A."""
    out = 0
    for x in range(n):
        if all(bm & a_mask for bm in basis_masks[x]):
            out |= 1 << x
    return out


def random_prefilter_space(rng, n, max_sets=3):
    bases = []
    for x in range(n):
        k = rng.randint(1, max_sets)
        row = []
        for _ in range(k):
            mask = rng.getrandbits(n) & ((1 << n) - 1)
            row.append(mask | (1 << x))
        bases.append(row)
    return PrefilterSpace(Universe.of_size(n), NeighborhoodBasis.from_masks(n, bases))


def random_filter_space(rng, n, max_sets=3):
    pre = random_prefilter_space(rng, n, max_sets)
    return FilterSpace(pre.universe, pre.basis)


def random_graph_space(rng, n, p=0.3):
    edges = [
        [y for y in range(n) if y != x and rng.random() < p] for x in range(n)
    ]
    return GraphSpace(Universe.of_size(n), edges)


def random_isotone_space(rng, n):
    builder = rng.choice([random_prefilter_space, random_filter_space, random_graph_space])
    return builder(rng, n)


def all_subsets(n):
    return (ElementSet(n, mask) for mask in range(1 << n))
