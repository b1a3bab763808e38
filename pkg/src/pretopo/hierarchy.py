"""From seeds to a quasi-hierarchy of closed subsets.

The pipeline has four phases:

1. grow one seed per item (the item plus ``d`` walked neighbors),
2. expand every seed by iterated pseudoclosure, keeping all intermediate
   sets (the elementary closed subsets),
3. score every intersecting pair of subsets with size-ratio weights,
4. threshold the scores into parent/child edges, collapsing pairs that are
   strongly related in both directions.

Flattening the result yields ordinary clusters plus outliers.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass

import numpy as np

from .core import ElementSet, PseudoclosureSpace, Universe
from .errors import ConfigError
from .similarity import Criterion, FeatureTable, distance_function, is_distance_criterion

_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Seed:
    """An item together with the neighbors walked from it."""

    origin: int
    members: ElementSet

    def __post_init__(self):
        if self.origin not in self.members:
            raise ValueError("seed must contain its origin")


@dataclass(frozen=True)
class ClosestNode:
    """Walk to the nearest unvisited item, measured by a distance criterion."""

    criterion: Criterion

    def __post_init__(self):
        if not is_distance_criterion(self.criterion):
            raise ConfigError(
                f"{type(self.criterion).__name__} does not define a distance"
            )

    @classmethod
    def from_criteria(cls, criteria: list[Criterion]) -> "ClosestNode":
        for c in criteria:
            if is_distance_criterion(c):
                return cls(c)
        raise ConfigError("no distance-kind criterion available for the closest-node walk")


@dataclass(frozen=True)
class RandomNeighbor:
    """Walk to a uniformly random unvisited neighbor of the current item."""

    rng_seed: int = 0


SeedFunc = ClosestNode | RandomNeighbor


def find_neighbors(
    space: PseudoclosureSpace,
    table: FeatureTable | None,
    first_node: int,
    d: int,
    seed_func: SeedFunc,
) -> list[int]:
    """Walk ``d`` steps from ``first_node``, never revisiting a node.

    Each step starts from the last node reached.  The walk ends early when
    no candidate remains, so the path may be shorter than ``d``.
    """
    n = space.size
    if not 0 <= first_node < n:
        raise ValueError(f"item {first_node} outside universe of size {n}")
    if d < 0:
        raise ValueError("neighbor count d must be >= 0")
    path: list[int] = []
    visited = 1 << first_node

    if isinstance(seed_func, ClosestNode):
        if table is None:
            raise ConfigError("closest-node walk needs a feature table")
        dist = distance_function(table, seed_func.criterion)
        last = first_node
        for _ in range(d):
            best = -1
            best_d = float("inf")
            for j in range(n):
                if visited >> j & 1:
                    continue
                dj = dist(last, j)
                if dj < best_d:
                    best, best_d = j, dj
            if best < 0:
                break
            path.append(best)
            visited |= 1 << best
            last = best
        return path

    if isinstance(seed_func, RandomNeighbor):
        # one stream per origin so seeds are independent of walk order
        rng = random.Random(f"{seed_func.rng_seed}:{first_node}")
        last = first_node
        for _ in range(d):
            candidates_mask = space.neighbor_mask(last) & ~visited
            if not candidates_mask:
                break
            candidates = ElementSet(n, candidates_mask).members()
            nxt = candidates[rng.randrange(len(candidates))]
            path.append(nxt)
            visited |= 1 << nxt
            last = nxt
        return path

    raise ConfigError(f"unknown seed function {seed_func!r}")


def elementary_quasiclosures(
    space: PseudoclosureSpace,
    table: FeatureTable | None,
    d: int,
    seed_func: SeedFunc,
) -> list[Seed]:
    """One seed per item: the item plus its walked neighbors."""
    seeds = []
    for x in range(space.size):
        path = find_neighbors(space, table, x, d, seed_func)
        seeds.append(Seed(x, ElementSet.from_members(space.size, [x, *path])))
    return seeds


class ClosedFamily:
    """A deduplicated family of non-empty subsets in canonical order.

    Canonical order is cardinality ascending, ties broken by the numeric
    value of the member bitmask, so equal inputs always produce the same
    indexing.
    """

    def __init__(self, sets):
        unique = {s.mask: s for s in sets}
        self.sets: list[ElementSet] = sorted(unique.values(), key=ElementSet.sort_key)
        self._index = {s.mask: i for i, s in enumerate(self.sets)}

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def __getitem__(self, i: int) -> ElementSet:
        return self.sets[i]

    def index_of(self, s: ElementSet) -> int:
        return self._index[s.mask]

    def __eq__(self, other) -> bool:
        return isinstance(other, ClosedFamily) and self.sets == other.sets

    def __repr__(self) -> str:
        return f"ClosedFamily({len(self.sets)} sets)"


def elementary_closed_subsets(space: PseudoclosureSpace, seeds: list[Seed]) -> ClosedFamily:
    """Expand every seed to its closure, recording each intermediate set.

    Sets are bucketed by cardinality and processed smallest-first; since a
    strict expansion always lands in a strictly larger bucket, every set is
    treated exactly once.
    """
    n = space.size
    buckets: list[list[int]] = [[] for _ in range(n + 1)]
    seen: set[int] = set()

    def insert(mask: int):
        if mask not in seen:
            seen.add(mask)
            buckets[mask.bit_count()].append(mask)

    for seed in seeds:
        insert(seed.members.mask)
    for size in range(n + 1):
        for mask in buckets[size]:
            grown = space._pseudoclosure_mask(mask)
            if grown != mask:
                insert(grown)
    return ClosedFamily(ElementSet(n, m) for m in seen)


def extract_adjacency(family: ClosedFamily) -> np.ndarray:
    """Relation-strength matrix over the family.

    For intersecting distinct sets F and G the entry from G to F is
    (|G|/|F|) * (|F&G|/|F|) and symmetrically; disjoint pairs and the
    diagonal stay 0.  Containment makes the larger set's entry at least 1.
    """
    m = len(family)
    adj = np.zeros((m, m), dtype=np.float64)
    sets = family.sets
    sizes = [len(s) for s in sets]
    for i in range(m):
        if sizes[i] == 0:
            raise ValueError("closed family must not contain the empty set")
    for i in range(m):
        mi, ni = sets[i].mask, sizes[i]
        for j in range(i + 1, m):
            inter = (mi & sets[j].mask).bit_count()
            if inter == 0:
                continue
            nj = sizes[j]
            # row i -> column j reads "how strongly i attracts j"
            adj[i, j] = (ni / nj) * (inter / nj)
            adj[j, i] = (nj / ni) * (inter / ni)
    return adj


@dataclass
class QuasiHierarchy:
    """Thresholded parent/child structure over a family of subsets."""

    universe: Universe
    family: ClosedFamily
    adjacency: np.ndarray
    threshold: float
    parent_edges: list[tuple[int, int, float]]
    roots: list[int]
    universe_coverage: ElementSet

    def children_of(self, idx: int) -> list[int]:
        return [c for p, c, _ in self.parent_edges if p == idx]

    def to_json_dict(self) -> dict:
        return {
            "schema_version": _SCHEMA_VERSION,
            "threshold": self.threshold,
            "universe_size": self.universe.size,
            "sets": [sorted(s) for s in self.family],
            "edges": [[p, c, w] for p, c, w in self.parent_edges],
            "roots": list(self.roots),
        }

    def to_dot(self, min_size: int = 1) -> str:
        """Graphviz rendering; nodes smaller than ``min_size`` are dropped."""
        keep = {i for i, s in enumerate(self.family) if len(s) >= min_size}
        lines = ["digraph quasihierarchy {", "  rankdir=TB;"]
        for i in sorted(keep):
            size = len(self.family[i])
            shape = "doubleoctagon" if i in self.roots else "ellipse"
            lines.append(f'  n{i} [label="set {i} (n={size})", shape={shape}];')
        for p, c, w in self.parent_edges:
            if p in keep and c in keep:
                lines.append(f'  n{p} -> n{c} [label="{w:.3f}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_json_dict(cls, doc: dict) -> "QuasiHierarchy":
        n = int(doc["universe_size"])
        universe = Universe.of_size(n)
        family = ClosedFamily(
            ElementSet.from_members(n, members) for members in doc["sets"]
        )
        edges = [(int(p), int(c), float(w)) for p, c, w in doc["edges"]]
        roots = [int(r) for r in doc["roots"]]
        coverage_mask = 0
        for s in family:
            coverage_mask |= s.mask
        return cls(
            universe=universe,
            family=family,
            adjacency=extract_adjacency(family),
            threshold=float(doc["threshold"]),
            parent_edges=edges,
            roots=roots,
            universe_coverage=ElementSet(n, coverage_mask),
        )


def extract_quasihierarchy(
    family: ClosedFamily,
    adjacency: np.ndarray,
    th_qh: float,
    universe: Universe | None = None,
    tie_break: str = "lowest_index",
    tie_rng_seed: int = 0,
) -> QuasiHierarchy:
    """Prune mutually related subsets, then wire parent edges.

    Pairs related above ``th_qh`` in both directions are equivalent; in each
    connected group only the largest set survives (ties go to the lowest
    canonical index, or to a seeded random pick when ``tie_break="random"``).
    Among survivors, an edge runs from the strictly larger set of every pair
    whose relation reaches ``th_qh``; roots are the sets without a parent.
    """
    if not 0 < th_qh <= 1:
        raise ConfigError(f"th_qh must lie in (0, 1], got {th_qh}")
    if tie_break not in ("lowest_index", "random"):
        raise ConfigError(f"unknown tie_break {tie_break!r}")
    m = len(family)
    if universe is None:
        n = family[0].n if m else 0
        universe = Universe.of_size(n)

    # union-find over mutually related pairs
    parent = list(range(m))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if adjacency[i, j] >= th_qh and adjacency[j, i] >= th_qh:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    rng = random.Random(tie_rng_seed)
    survivors: list[int] = []
    for members in groups.values():
        best_size = max(len(family[i]) for i in members)
        candidates = [i for i in members if len(family[i]) == best_size]
        if tie_break == "random" and len(candidates) > 1:
            survivors.append(candidates[rng.randrange(len(candidates))])
        else:
            survivors.append(min(candidates))
    survivors.sort()

    pruned_family = ClosedFamily(family[i] for i in survivors)
    pruned_adj = adjacency[np.ix_(survivors, survivors)].copy()

    k = len(pruned_family)
    edges: list[tuple[int, int, float]] = []
    has_parent = [False] * k
    for i in range(k):
        si = len(pruned_family[i])
        for j in range(k):
            if i == j:
                continue
            if pruned_adj[i, j] >= th_qh and si > len(pruned_family[j]):
                edges.append((i, j, float(pruned_adj[i, j])))
                has_parent[j] = True
    roots = [i for i in range(k) if not has_parent[i]]

    coverage_mask = 0
    for s in pruned_family:
        coverage_mask |= s.mask
    return QuasiHierarchy(
        universe=universe,
        family=pruned_family,
        adjacency=pruned_adj,
        threshold=th_qh,
        parent_edges=edges,
        roots=roots,
        universe_coverage=ElementSet(universe.size, coverage_mask),
    )


def quasistructural_analysis(
    space: PseudoclosureSpace,
    table: FeatureTable | None,
    d: int,
    seed_func: SeedFunc,
    th_qh: float,
    tie_break: str = "lowest_index",
) -> QuasiHierarchy:
    """Run the full pipeline: seeds, closures, scores, thresholded hierarchy."""
    seeds = elementary_quasiclosures(space, table, d, seed_func)
    family = elementary_closed_subsets(space, seeds)
    adjacency = extract_adjacency(family)
    return extract_quasihierarchy(
        family, adjacency, th_qh, universe=space.universe, tie_break=tie_break
    )


@dataclass
class ClusteringResult:
    """Flat view of a quasi-hierarchy: clusters, assignment, outliers."""

    assignment: dict[int, int]
    clusters: list[ElementSet]
    outliers: ElementSet
    hierarchy: QuasiHierarchy

    def to_csv(self, path) -> None:
        """item_id,cluster_id rows; outliers get cluster_id -1."""
        universe = self.hierarchy.universe
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["item_id", "cluster_id"])
            for i in range(universe.size):
                writer.writerow([universe.label_of(i), self.assignment.get(i, -1)])


def flatten(hierarchy: QuasiHierarchy) -> ClusteringResult:
    """Cut the hierarchy into disjointly assigned clusters plus outliers.

    The cut is the set of roots; a root covering the whole universe is
    replaced by its children.  Items lying in several cut sets go to the
    smallest one (ties to the lowest canonical index).  Items in no cut set
    of size at least 2 are outliers.
    """
    universe = hierarchy.universe
    full_mask = universe.full_mask
    cut: list[int] = []
    for r in hierarchy.roots:
        if universe.size and hierarchy.family[r].mask == full_mask:
            cut.extend(hierarchy.children_of(r))
        else:
            cut.append(r)
    cut = sorted(set(cut))

    clusters = [hierarchy.family[i] for i in cut if len(hierarchy.family[i]) >= 2]
    # canonical family order lists clusters smallest-first, so taking the
    # first containing cluster realizes "smallest set wins, ties to the
    # lowest canonical index"
    assignment: dict[int, int] = {}
    for cluster_id, cset in enumerate(clusters):
        for item in cset:
            assignment.setdefault(item, cluster_id)
    assigned_mask = 0
    for item in assignment:
        assigned_mask |= 1 << item
    outliers = ElementSet(universe.size, full_mask & ~assigned_mask)
    return ClusteringResult(
        assignment=assignment,
        clusters=clusters,
        outliers=outliers,
        hierarchy=hierarchy,
    )
