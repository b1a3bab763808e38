"""Similarity criteria over item features, and neighborhood bases built from them.

Items carry optional features (a planar position, a scalar size, one or more
series).  A criterion turns one feature into a closed ball around each item;
a list of criteria becomes a neighborhood basis, and hence a pseudoclosure
space, via :func:`build_basis`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import FilterSpace, NeighborhoodBasis, PrefilterSpace, PseudoclosureSpace, Universe
from .errors import ConfigError, DegenerateSeriesError


@dataclass
class FeatureTable:
    """Per-item features. Every present feature covers all items.

    ``channels`` holds named auxiliary series matrices (one series per item
    and channel); they let several series-based criteria with different
    sampling coexist over the same items.
    """

    positions: list[tuple[float, ...]] | None = None
    sizes: list[float] | None = None
    series: list[list[float]] | None = None
    channels: dict[str, list[list[float]]] = field(default_factory=dict)

    def __post_init__(self):
        counts = {
            name: len(rows)
            for name, rows in (
                ("positions", self.positions),
                ("sizes", self.sizes),
                ("series", self.series),
            )
            if rows is not None
        }
        counts.update({f"channel {k!r}": len(v) for k, v in self.channels.items()})
        if len(set(counts.values())) > 1:
            raise ConfigError(f"feature lengths disagree: {counts}")
        for name, rows in [("series", self.series)] + [
            (k, v) for k, v in self.channels.items()
        ]:
            if rows is None:
                continue
            lengths = {len(s) for s in rows}
            if len(lengths) > 1:
                raise ConfigError(f"{name}: all series must share one length, got {sorted(lengths)}")
            if len(rows) and min(lengths) < 2:
                raise ConfigError(f"{name}: series must have length >= 2")
        if self.sizes is not None and any(s < 0 for s in self.sizes):
            raise ConfigError("sizes must be non-negative")

    @property
    def n_items(self) -> int:
        for rows in (self.positions, self.sizes, self.series, *self.channels.values()):
            if rows is not None:
                return len(rows)
        return 0

    def series_channel(self, channel: str | None) -> list[list[float]]:
        if channel is None:
            if self.series is None:
                raise ConfigError("table has no series feature")
            return self.series
        if channel not in self.channels:
            raise ConfigError(f"table has no series channel {channel!r}")
        return self.channels[channel]

    def to_csv(self, path) -> None:
        """Write the x,y,size,series_* schema (row order is item order)."""
        header = []
        if self.positions is not None:
            dims = len(self.positions[0]) if self.positions else 2
            if dims != 2:
                raise ConfigError("csv schema supports planar positions only")
            header += ["x", "y"]
        if self.sizes is not None:
            header.append("size")
        length = 0
        if self.series is not None:
            length = len(self.series[0]) if self.series else 0
            header += [f"series_{i}" for i in range(length)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(self.n_items):
                row: list = []
                if self.positions is not None:
                    row += [repr(self.positions[i][0]), repr(self.positions[i][1])]
                if self.sizes is not None:
                    row.append(repr(self.sizes[i]))
                if self.series is not None:
                    row += [repr(v) for v in self.series[i]]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "FeatureTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                return cls()
            rows = list(reader)
        cols = {name: idx for idx, name in enumerate(header)}
        series_cols = sorted(
            (name for name in cols if name.startswith("series_")),
            key=lambda name: int(name.split("_", 1)[1]),
        )
        positions = sizes = series = None
        if "x" in cols and "y" in cols:
            positions = [(float(r[cols["x"]]), float(r[cols["y"]])) for r in rows]
        if "size" in cols:
            sizes = [float(r[cols["size"]]) for r in rows]
        if series_cols:
            series = [[float(r[cols[c]]) for c in series_cols] for r in rows]
        return cls(positions=positions, sizes=sizes, series=series)


@dataclass(frozen=True)
class EuclideanBall:
    """Items within Euclidean distance ``radius`` of each other's position."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError(f"euclidean radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class SizeBall:
    """Items whose size differs by at most ``tolerance``."""

    tolerance: float

    def __post_init__(self):
        if self.tolerance < 0:
            raise ConfigError(f"size tolerance must be >= 0, got {self.tolerance}")


@dataclass(frozen=True)
class PearsonBall:
    """Items whose series correlate at least ``threshold`` (one-sided:
    anticorrelated series are dissimilar)."""

    threshold: float
    channel: str | None = None

    def __post_init__(self):
        if not -1 < self.threshold <= 1:
            raise ConfigError(f"pearson threshold must lie in (-1, 1], got {self.threshold}")


Criterion = EuclideanBall | SizeBall | PearsonBall

DISTANCE_KINDS = (EuclideanBall, SizeBall)


def is_distance_criterion(criterion: Criterion) -> bool:
    return isinstance(criterion, DISTANCE_KINDS)


def pearson(x, y) -> float:
    """Sample correlation of two equal-length sequences, clamped to [-1, 1].

    Raises :class:`DegenerateSeriesError` when either input is constant.
    """
    n = len(x)
    if n != len(y):
        raise ValueError(f"length mismatch: {n} vs {len(y)}")
    if n < 2:
        raise ValueError("correlation needs at least two samples")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxx = math.fsum((v - mx) ** 2 for v in x)
    syy = math.fsum((v - my) ** 2 for v in y)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSeriesError("constant series has no linear signal")
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def distance_function(table: FeatureTable, criterion: Criterion):
    """Pairwise distance callable for a distance-kind criterion."""
    if isinstance(criterion, EuclideanBall):
        if table.positions is None:
            raise ConfigError("euclidean criterion needs a position feature")
        pos = table.positions

        def dist(i: int, j: int) -> float:
            return math.dist(pos[i], pos[j])

        return dist
    if isinstance(criterion, SizeBall):
        if table.sizes is None:
            raise ConfigError("size criterion needs a size feature")
        sizes = table.sizes
        return lambda i, j: abs(sizes[i] - sizes[j])
    raise ConfigError(f"{type(criterion).__name__} does not define a distance")


def _series_matrix(table: FeatureTable, criterion: PearsonBall) -> np.ndarray:
    rows = table.series_channel(criterion.channel)
    return np.asarray(rows, dtype=np.float64)


def _correlation_matrix(data: np.ndarray) -> np.ndarray:
    n = data.shape[0]
    centered = data - data.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", centered, centered))
    for i, nv in enumerate(norms):
        if nv == 0.0:
            raise DegenerateSeriesError("constant series has no linear signal", item=i)
    out = np.ones((n, n), dtype=np.float64)
    for i in range(n):
        row = centered @ centered[i]
        np.divide(row, norms * norms[i], out=row)
        out[i, :] = row
        out[i, i] = 1.0
    np.clip(out, -1.0, 1.0, out=out)
    return out


def pairwise_matrix(table: FeatureTable, criterion: Criterion) -> np.ndarray:
    """Symmetric matrix of distances (diagonal 0) or correlations (diagonal 1)."""
    n = table.n_items
    if n == 0:
        return np.zeros((0, 0))
    if isinstance(criterion, EuclideanBall):
        if table.positions is None:
            raise ConfigError("euclidean criterion needs a position feature")
        pts = np.asarray(table.positions, dtype=np.float64).reshape(n, -1)
        diff = pts[:, None, :] - pts[None, :, :]
        out = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(out, 0.0)
        return out
    if isinstance(criterion, SizeBall):
        if table.sizes is None:
            raise ConfigError("size criterion needs a size feature")
        s = np.asarray(table.sizes, dtype=np.float64)
        return np.abs(s[:, None] - s[None, :])
    if isinstance(criterion, PearsonBall):
        return _correlation_matrix(_series_matrix(table, criterion))
    raise ConfigError(f"unknown criterion {criterion!r}")


def criterion_ball_masks(table: FeatureTable, criterion: Criterion) -> list[int]:
    """Per item, the bitmask of items inside its criterion ball (self included)."""
    n = table.n_items
    matrix = pairwise_matrix(table, criterion)
    if isinstance(criterion, PearsonBall):
        hits = matrix >= criterion.threshold
        np.fill_diagonal(hits, True)  # self-pair by fiat
    elif isinstance(criterion, EuclideanBall):
        hits = matrix <= criterion.radius
    else:
        hits = matrix <= criterion.tolerance
    masks = []
    for i in range(n):
        mask = 1 << i
        for j in np.flatnonzero(hits[i]):
            mask |= 1 << int(j)
        masks.append(mask)
    return masks


def build_basis(
    table: FeatureTable,
    criteria: list[Criterion],
    mode: str = "prefilter",
    labels=None,
) -> PseudoclosureSpace:
    """Package one ball per criterion and item into a pseudoclosure space.

    ``mode`` selects the conjunction semantics: ``"prefilter"`` requires each
    criterion ball to meet the probed set on its own, ``"filter"`` requires a
    single witness inside all balls at once.
    """
    if not criteria:
        raise ConfigError("at least one criterion is required")
    if mode not in ("prefilter", "filter"):
        raise ConfigError(f"unknown mode {mode!r}")
    n = table.n_items
    per_criterion = [criterion_ball_masks(table, c) for c in criteria]
    basis = NeighborhoodBasis.from_masks(
        n, [[balls[x] for balls in per_criterion] for x in range(n)]
    )
    universe = Universe.of_size(n) if labels is None else Universe.with_labels(labels)
    if universe.size != n:
        raise ConfigError("label count does not match item count")
    cls = PrefilterSpace if mode == "prefilter" else FilterSpace
    return cls(universe, basis)
