"""Undirected graphs in CSR form, node-classification datasets and their I/O."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, LabelError, NodeIndexError, ParseError


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph; every edge is stored in both directions.

    Build with :meth:`from_edges`, which symmetrizes, drops self-loops and
    merges duplicates.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            bad = e[(e < 0).any(axis=1) | (e >= n).any(axis=1)][0]
            raise NodeIndexError(f"edge {tuple(bad)} references a node outside [0, {n})")
        e = e[e[:, 0] != e[:, 1]]
        both = np.concatenate([e, e[:, ::-1]])
        # unique (row, col) pairs, sorted row-major
        keys = np.unique(both[:, 0] * n + both[:, 1]) if len(both) else np.empty(0, np.int64)
        rows, cols = keys // n, keys % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(n, _frozen(indptr, np.int64), _frozen(cols, np.int64))

    @property
    def m(self) -> int:
        return int(self.indptr[-1]) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Undirected edge list with ``u < v``, shape (m, 2)."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        keep = rows < self.indices
        return np.stack([rows[keep], self.indices[keep]], axis=1)

    def dense_adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), self.degrees)
        a[rows, self.indices] = 1.0
        return a


@dataclass(frozen=True, eq=False)
class Dataset:
    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        n = self.graph.n
        if self.features.shape[0] != n:
            raise LabelError(f"feature rows ({self.features.shape[0]}) != node count ({n})")
        if self.labels.shape != (n,):
            raise LabelError(f"label count ({self.labels.shape[0]}) != node count ({n})")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise LabelError(f"labels must lie in [0, {self.num_classes})")

    @property
    def n(self) -> int:
        return self.graph.n


# -- file formats -----------------------------------------------------------

def read_edge_list(path) -> np.ndarray:
    """Whitespace-separated pairs of 0-based ids; '#' starts a comment line."""
    path = Path(path)
    edges = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(path, lineno, f"expected two node ids, got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, lineno, f"non-integer node id in {line!r}") from None
            if u < 0 or v < 0:
                raise ParseError(path, lineno, "negative node id")
            edges.append((u, v))
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def read_features(path) -> np.ndarray:
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row:
                continue
            try:
                vals = [float(x) for x in row]
            except ValueError:
                raise ParseError(path, lineno, "non-numeric feature value") from None
            if rows and len(vals) != len(rows[0]):
                raise ParseError(path, lineno, f"expected {len(rows[0])} columns, got {len(vals)}")
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(path, lineno, "non-finite feature value")
            rows.append(vals)
    return np.array(rows, dtype=np.float64).reshape(len(rows), -1)


def read_labels(path) -> np.ndarray:
    path = Path(path)
    labels = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError:
                raise ParseError(path, lineno, f"expected an integer label, got {line!r}") from None
    return np.array(labels, dtype=np.int64)


def load_dataset(edge_path, feature_path, label_path, num_classes: int | None = None) -> Dataset:
    """Read the three dataset files.

    The node count is the number of feature rows. `num_classes` defaults to
    ``max(label) + 1``; when given, larger labels raise `LabelError`.
    """
    features = read_features(feature_path)
    labels = read_labels(label_path)
    n = features.shape[0]
    edges = read_edge_list(edge_path)
    if edges.size and edges.max() >= n:
        i = int(np.argmax(edges.max(axis=1)))
        raise NodeIndexError(
            f"{edge_path}: edge {tuple(edges[i])} references node >= n={n} (n taken from {feature_path})"
        )
    if len(labels) != n:
        raise LabelError(f"{label_path}: {len(labels)} labels for {n} nodes")
    if labels.size and labels.min() < 0:
        raise LabelError(f"{label_path}: negative label")
    c = int(labels.max()) + 1 if num_classes is None else num_classes
    if labels.size and labels.max() >= c:
        raise LabelError(f"{label_path}: label {labels.max()} >= num_classes={c}")
    return Dataset(Graph.from_edges(n, edges), features, labels, c)


def read_split(path, n: int | None = None) -> dict[str, np.ndarray]:
    with Path(path).open() as fh:
        raw = json.load(fh)
    out = {}
    for part in ("train", "val", "test"):
        if part not in raw:
            raise LabelError(f"{path}: split is missing {part!r}")
        idx = np.asarray(raw[part], dtype=np.int64)
        if n is not None and idx.size and (idx.min() < 0 or idx.max() >= n):
            raise NodeIndexError(f"{path}: {part} index outside [0, {n})")
        out[part] = idx
    return out


# -- statistics -------------------------------------------------------------

def homophily(dataset: Dataset) -> float:
    """Mean over nodes of the fraction of neighbours sharing the node's label.

    Isolated nodes contribute 0.
    """
    g, y = dataset.graph, dataset.labels
    if g.n == 0:
        return 0.0
    rows = np.repeat(np.arange(g.n), g.degrees)
    same = np.bincount(rows, weights=(y[rows] == y[g.indices]), minlength=g.n)
    deg = g.degrees
    frac = np.divide(same, deg, out=np.zeros(g.n), where=deg > 0)
    return float(frac.mean())


# -- synthetic graphs -------------------------------------------------------

def generate_synthetic(n: int, kind: str, seed: int = 0, *, num_features: int = 2,
                       minor_scale: float = 0.7) -> Dataset:
    """Two-class graph with labels planted on an extreme eigenvector.

    ``homophilic``: two equal blocks, dense inside, sparse across; labels are
    the blocks (low-frequency). ``heterophilic``: near-bipartite graph whose
    two sides carry the two labels (high-frequency).

    Features carry the label only through their second moment: each class
    draws from a zero-mean Gaussian with unit scale on its own half of the
    coordinates and `minor_scale` on the other half. A per-node classifier
    can read the class (weakly) from the spread of its own row, but
    neighbourhood averaging of raw features mixes the two variance patterns.
    """
    if kind not in ("homophilic", "heterophilic"):
        raise ValueError(f"unknown synthetic kind {kind!r}")
    if n < 8:
        raise CapacityError(f"synthetic graphs need n >= 8, got {n}")
    if kind == "heterophilic" and n % 2:
        raise CapacityError("heterophilic synthetic graphs need an even n")
    rng = np.random.default_rng(seed)
    half = n // 2
    labels = np.zeros(n, dtype=np.int64)
    labels[half:] = 1
    same = labels[:, None] == labels[None, :]
    iu = np.triu_indices(n, 1)
    if kind == "homophilic":
        p_in, p_out = min(1.0, 10.0 / half), min(1.0, 0.5 / half)
    else:
        p_in, p_out = min(1.0, 0.3 / half), min(1.0, 6.0 / half)
    prob = np.where(same, p_in, p_out)[iu]
    keep = rng.random(prob.shape) < prob
    edges = np.stack([iu[0][keep], iu[1][keep]], axis=1)

    half_f = num_features // 2
    scale = np.full((2, num_features), minor_scale)
    scale[0, :half_f] = 1.0
    scale[1, half_f:] = 1.0
    features = rng.standard_normal((n, num_features)) * scale[labels]
    perm = rng.permutation(n)
    inv = np.empty(n, dtype=np.int64)
    inv[perm] = np.arange(n)
    return Dataset(Graph.from_edges(n, inv[edges]), features[perm], labels[perm], 2)
