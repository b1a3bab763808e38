"""Pretopological spaces over finite universes.

A space pairs a finite universe with a pseudoclosure operator ``a(.)``
satisfying ``a(empty) = empty`` and ``A subset-of a(A)``.  Three concrete
space kinds are provided:

* :class:`PrefilterSpace` -- each item carries a list of basis sets; an item
  joins ``a(A)`` when every one of its basis sets intersects ``A``.
* :class:`FilterSpace` -- same storage, but the basis sets are intersected
  first; an item joins ``a(A)`` when that single intersection meets ``A``.
* :class:`GraphSpace` -- ``a(A)`` is ``A`` plus all successors of ``A``
  along directed edges.

Sets of items are bitsets (:class:`ElementSet`) over dense 0-based indices,
so the hot operations are integer ANDs and ORs.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import ConfigError, UnsupportedSpaceError

_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Universe:
    """A finite, dense index space 0..size-1 with optional external labels."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 0:
            raise ValueError(f"universe size must be >= 0, got {self.size}")
        if self.labels is not None:
            if len(self.labels) != self.size:
                raise ValueError("label count does not match universe size")
            if len(set(self.labels)) != self.size:
                raise ValueError("labels must be unique")

    @classmethod
    def of_size(cls, n: int) -> "Universe":
        return cls(n)

    @classmethod
    def with_labels(cls, labels: Sequence[str]) -> "Universe":
        return cls(len(labels), tuple(labels))

    def label_of(self, index: int) -> str:
        if self.labels is not None:
            return self.labels[index]
        return str(index)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def full_set(self) -> "ElementSet":
        return ElementSet(self.size, self.full_mask)

    def empty_set(self) -> "ElementSet":
        return ElementSet(self.size, 0)

    def subset(self, members: Iterable[int]) -> "ElementSet":
        return ElementSet.from_members(self.size, members)


class ElementSet:
    """An immutable subset of a universe, stored as a bitmask.

    Equality is extensional within a universe of the same size; instances
    are hashable and ordered canonically by (cardinality, mask value).
    """

    __slots__ = ("n", "mask")

    def __init__(self, n: int, mask: int = 0):
        if mask < 0 or mask >> n:
            raise ValueError(f"mask {mask:#x} out of range for universe of size {n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mask", mask)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("ElementSet is immutable")

    @classmethod
    def from_members(cls, n: int, members: Iterable[int]) -> "ElementSet":
        mask = 0
        for i in members:
            if not 0 <= i < n:
                raise ValueError(f"item index {i} out of range for universe of size {n}")
            mask |= 1 << i
        return cls(n, mask)

    def members(self) -> list[int]:
        return list(self)

    def __iter__(self) -> Iterator[int]:
        mask = self.mask
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.n and bool(self.mask >> i & 1)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ElementSet)
            and self.n == other.n
            and self.mask == other.mask
        )

    def __hash__(self) -> int:
        return hash((self.n, self.mask))

    def __or__(self, other: "ElementSet") -> "ElementSet":
        self._check(other)
        return ElementSet(self.n, self.mask | other.mask)

    def __and__(self, other: "ElementSet") -> "ElementSet":
        self._check(other)
        return ElementSet(self.n, self.mask & other.mask)

    def __sub__(self, other: "ElementSet") -> "ElementSet":
        self._check(other)
        return ElementSet(self.n, self.mask & ~other.mask)

    def complement(self) -> "ElementSet":
        return ElementSet(self.n, self.mask ^ ((1 << self.n) - 1))

    def issubset(self, other: "ElementSet") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def sort_key(self) -> tuple[int, int]:
        """Canonical ordering: cardinality ascending, then mask value."""
        return (self.mask.bit_count(), self.mask)

    def _check(self, other: "ElementSet"):
        if self.n != other.n:
            raise ValueError("element sets belong to universes of different size")

    def __repr__(self) -> str:
        return f"ElementSet({self.n}, {{{', '.join(map(str, self))}}})"


@dataclass(frozen=True)
class NeighborhoodBasis:
    """Per-item lists of basis sets; every basis set of x must contain x."""

    sets: tuple[tuple[ElementSet, ...], ...]

    def __post_init__(self):
        for x, basis in enumerate(self.sets):
            if not basis:
                raise ValueError(f"item {x} has an empty basis list")
            for b in basis:
                if x not in b:
                    raise ValueError(f"basis set {b!r} of item {x} does not contain {x}")

    @classmethod
    def from_masks(cls, n: int, masks: Sequence[Sequence[int]]) -> "NeighborhoodBasis":
        return cls(
            tuple(tuple(ElementSet(n, m) for m in row) for row in masks)
        )

    def __len__(self) -> int:
        return len(self.sets)


class PseudoclosureSpace:
    """Base class: a universe plus a pseudoclosure operator.

    Subclasses implement :meth:`_pseudoclosure_mask`; everything else
    (closure iteration, interior, diagnostics) is generic.  Instances are
    immutable after construction and safe to share across threads.
    """

    kind = "abstract"

    def __init__(self, universe: Universe):
        self.universe = universe

    @property
    def size(self) -> int:
        return self.universe.size

    def _pseudoclosure_mask(self, mask: int) -> int:
        raise NotImplementedError

    def _require(self, a: ElementSet):
        if a.n != self.size:
            raise ValueError(
                f"element set over universe of size {a.n} used with space of size {self.size}"
            )

    def pseudoclosure(self, a: ElementSet) -> ElementSet:
        """One application of the expansion operator."""
        self._require(a)
        return ElementSet(self.size, self._pseudoclosure_mask(a.mask))

    def closure(self, a: ElementSet) -> ElementSet:
        """Iterate the pseudoclosure until it reaches a fixed point.

        Each non-final step strictly grows the set, so the loop ends after
        at most ``size`` iterations.
        """
        self._require(a)
        mask = a.mask
        while True:
            grown = self._pseudoclosure_mask(mask)
            if grown == mask:
                return ElementSet(self.size, mask)
            mask = grown

    def interior(self, a: ElementSet) -> ElementSet:
        """Dual operator: complement of the pseudoclosure of the complement."""
        self._require(a)
        full = self.universe.full_mask
        return ElementSet(self.size, self._pseudoclosure_mask(a.mask ^ full) ^ full)

    def neighborhoods_of(self, x: int) -> list[ElementSet]:
        """A minimal generating family of neighborhoods of item ``x``."""
        raise NotImplementedError

    def neighbor_mask(self, x: int) -> int:
        """Items adjacent to ``x`` (union of its neighborhoods, minus ``x``)."""
        raise NotImplementedError

    def to_json_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


class PrefilterSpace(PseudoclosureSpace):
    """Neighborhood space: x joins a(A) when every basis set of x meets A."""

    kind = "prefilter"

    def __init__(self, universe: Universe, basis: NeighborhoodBasis):
        super().__init__(universe)
        if len(basis) != universe.size:
            raise ValueError("basis does not cover the universe")
        self.basis = basis
        self._basis_masks = [
            tuple(b.mask for b in row) for row in basis.sets
        ]

    def _pseudoclosure_mask(self, mask: int) -> int:
        out = 0
        bit = 1
        for masks in self._basis_masks:
            for bm in masks:
                if not bm & mask:
                    break
            else:
                out |= bit
            bit <<= 1
        return out

    def neighborhoods_of(self, x: int) -> list[ElementSet]:
        return list(self.basis.sets[x])

    def neighbor_mask(self, x: int) -> int:
        union = 0
        for bm in self._basis_masks[x]:
            union |= bm
        return union & ~(1 << x)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": _SCHEMA_VERSION,
            "universe": [self.universe.label_of(i) for i in range(self.size)],
            "kind": self.kind,
            "bases": [[sorted(b) for b in row] for row in self.basis.sets],
        }


class FilterSpace(PrefilterSpace):
    """Neighborhood space whose basis sets are intersected before testing.

    x joins a(A) when the intersection of all its basis sets meets A, i.e.
    the generated family is stable under intersection and has a single-set
    basis.
    """

    kind = "filter"

    def __init__(self, universe: Universe, basis: NeighborhoodBasis):
        super().__init__(universe, basis)
        inter = []
        for masks in self._basis_masks:
            m = masks[0]
            for bm in masks[1:]:
                m &= bm
            inter.append(m)
        self._intersection_masks = inter

    def _pseudoclosure_mask(self, mask: int) -> int:
        out = 0
        bit = 1
        for im in self._intersection_masks:
            if im & mask:
                out |= bit
            bit <<= 1
        return out

    def neighborhoods_of(self, x: int) -> list[ElementSet]:
        return [ElementSet(self.size, self._intersection_masks[x])]


class GraphSpace(PseudoclosureSpace):
    """Graph form: a(A) = A plus the out-neighbors of every item of A."""

    kind = "graph"

    def __init__(self, universe: Universe, edges: Sequence[Sequence[int]]):
        super().__init__(universe)
        n = universe.size
        if len(edges) != n:
            raise ValueError("adjacency list does not cover the universe")
        succ = [0] * n
        pred = [0] * n
        for x, targets in enumerate(edges):
            for y in targets:
                if not 0 <= y < n:
                    raise ValueError(f"edge {x}->{y} leaves the universe")
                succ[x] |= 1 << y
                pred[y] |= 1 << x
        self.edges = tuple(tuple(sorted(t)) for t in edges)
        self._succ_masks = succ
        self._pred_masks = pred

    def _pseudoclosure_mask(self, mask: int) -> int:
        out = mask
        rest = mask
        succ = self._succ_masks
        while rest:
            low = rest & -rest
            out |= succ[low.bit_length() - 1]
            rest ^= low
        return out

    def neighborhoods_of(self, x: int) -> list[ElementSet]:
        # x lies in i(V) exactly when V contains x and all of x's predecessors,
        # so that set is the single minimal neighborhood.
        return [ElementSet(self.size, self._pred_masks[x] | (1 << x))]

    def neighbor_mask(self, x: int) -> int:
        return self._succ_masks[x]

    def to_json_dict(self) -> dict:
        return {
            "schema_version": _SCHEMA_VERSION,
            "universe": [self.universe.label_of(i) for i in range(self.size)],
            "kind": self.kind,
            "edges": [list(t) for t in self.edges],
        }


def space_from_json_dict(doc: dict) -> PseudoclosureSpace:
    try:
        labels = list(doc["universe"])
        kind = doc["kind"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"space document is missing {exc}") from exc
    universe = Universe.with_labels(labels)
    n = universe.size
    if kind == "graph":
        edges = doc.get("edges")
        if edges is None or len(edges) != n:
            raise ConfigError("graph space document needs one successor list per item")
        return GraphSpace(universe, edges)
    if kind in ("prefilter", "filter"):
        rows = doc.get("bases")
        if rows is None or len(rows) != n:
            raise ConfigError("neighborhood space document needs one basis list per item")
        basis = NeighborhoodBasis(
            tuple(
                tuple(ElementSet.from_members(n, b) for b in row) for row in rows
            )
        )
        cls = PrefilterSpace if kind == "prefilter" else FilterSpace
        return cls(universe, basis)
    raise ConfigError(f"unknown space kind {kind!r}")


def space_from_json(text: str) -> PseudoclosureSpace:
    return space_from_json_dict(json.loads(text))


class CheckResult(NamedTuple):
    ok: bool
    counterexample: tuple[ElementSet, ...] | None

    def __bool__(self) -> bool:
        return self.ok


_EXHAUSTIVE_LIMIT = 12


def _pseudoclosure_table(space: PseudoclosureSpace) -> list[int]:
    """a(S) for every subset mask. Exponential; callers cap the universe size."""
    return [space._pseudoclosure_mask(m) for m in range(1 << space.size)]


def check_isotony(space: PseudoclosureSpace, trials: int = 1000, rng_seed: int = 0) -> CheckResult:
    """Test A subset-of B implies a(A) subset-of a(B).

    Exhaustive over all nested pairs when the universe has at most 12 items,
    otherwise ``trials`` sampled nested pairs.
    """
    n = space.size
    if n <= _EXHAUSTIVE_LIMIT:
        table = _pseudoclosure_table(space)
        for b_mask in range(1 << n):
            a_b = table[b_mask]
            sub = b_mask
            while True:
                if table[sub] & ~a_b:
                    return CheckResult(
                        False, (ElementSet(n, sub), ElementSet(n, b_mask))
                    )
                if sub == 0:
                    break
                sub = (sub - 1) & b_mask
        return CheckResult(True, None)

    rng = random.Random(rng_seed)
    full = space.universe.full_mask
    for _ in range(trials):
        b_mask = rng.getrandbits(n) & full
        a_mask = rng.getrandbits(n) & b_mask
        if space._pseudoclosure_mask(a_mask) & ~space._pseudoclosure_mask(b_mask):
            return CheckResult(False, (ElementSet(n, a_mask), ElementSet(n, b_mask)))
    return CheckResult(True, None)


def check_additivity(space: PseudoclosureSpace, trials: int = 1000, rng_seed: int = 0) -> CheckResult:
    """Test a(A | B) == a(A) | a(B) over pairs of subsets.

    Exhaustive (with a memoized pseudoclosure table) when the universe has at
    most 12 items, otherwise sampled.
    """
    n = space.size
    if n <= _EXHAUSTIVE_LIMIT:
        table = _pseudoclosure_table(space)
        for a_mask in range(1 << n):
            for b_mask in range(a_mask, 1 << n):
                if table[a_mask | b_mask] != table[a_mask] | table[b_mask]:
                    return CheckResult(
                        False, (ElementSet(n, a_mask), ElementSet(n, b_mask))
                    )
        return CheckResult(True, None)

    rng = random.Random(rng_seed)
    full = space.universe.full_mask
    for _ in range(trials):
        a_mask = rng.getrandbits(n) & full
        b_mask = rng.getrandbits(n) & full
        lhs = space._pseudoclosure_mask(a_mask | b_mask)
        rhs = space._pseudoclosure_mask(a_mask) | space._pseudoclosure_mask(b_mask)
        if lhs != rhs:
            return CheckResult(False, (ElementSet(n, a_mask), ElementSet(n, b_mask)))
    return CheckResult(True, None)


def check_singleton_union(space: PseudoclosureSpace, trials: int = 1000, rng_seed: int = 0) -> CheckResult:
    """Test a(A) == union of a({x}) over x in A (singleton decomposition)."""
    n = space.size
    singles = [space._pseudoclosure_mask(1 << i) for i in range(n)]

    def decomposed(mask: int) -> int:
        out = 0
        rest = mask
        while rest:
            low = rest & -rest
            out |= singles[low.bit_length() - 1]
            rest ^= low
        return out

    if n <= _EXHAUSTIVE_LIMIT:
        candidates: Iterable[int] = range(1 << n)
    else:
        rng = random.Random(rng_seed)
        full = space.universe.full_mask
        candidates = (rng.getrandbits(n) & full for _ in range(trials))
    for mask in candidates:
        if space._pseudoclosure_mask(mask) != decomposed(mask):
            return CheckResult(False, (ElementSet(n, mask),))
    return CheckResult(True, None)


def reconstruct_neighborhoods(space: PseudoclosureSpace) -> list[list[ElementSet]]:
    """Recover, per item, the minimal sets V with x in i(V).

    Exponential in the universe size; restricted to at most 12 items.
    The space must be isotone, otherwise the recovered family does not
    determine the original operator.
    """
    n = space.size
    if n > _EXHAUSTIVE_LIMIT:
        raise ConfigError(f"neighborhood reconstruction is exponential; universe of {n} items exceeds {_EXHAUSTIVE_LIMIT}")
    ok, witness = check_isotony(space)
    if not ok:
        raise UnsupportedSpaceError(f"space is not isotone (witness {witness})")
    table = _pseudoclosure_table(space)
    full = space.universe.full_mask
    out: list[list[ElementSet]] = []
    for x in range(n):
        bit = 1 << x
        # x in i(V)  <=>  x not in a(complement of V)
        accepted = [v for v in range(1 << n) if not table[v ^ full] & bit]
        accepted.sort(key=lambda v: v.bit_count())
        minimal: list[int] = []
        for v in accepted:
            if not any(m & ~v == 0 for m in minimal):
                minimal.append(v)
        out.append([ElementSet(n, m) for m in sorted(minimal)])
    return out


def pseudoclosure_from_prefilter_roundtrip(space: PseudoclosureSpace) -> bool:
    """Rebuild the operator from its recovered neighborhoods and compare.

    Returns True when the rebuilt prefilter pseudoclosure agrees with the
    original on every subset of the universe.
    """
    n = space.size
    if n == 0:
        return True
    families = reconstruct_neighborhoods(space)
    basis = NeighborhoodBasis(tuple(tuple(row) for row in families))
    rebuilt = PrefilterSpace(space.universe, basis)
    table = _pseudoclosure_table(space)
    rebuilt_table = _pseudoclosure_table(rebuilt)
    return table == rebuilt_table
