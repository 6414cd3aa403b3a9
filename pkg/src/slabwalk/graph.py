"""Finite induced subgraphs of Z^d and the two-sided glued graph."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components

__all__ = [
    "BoxSpec",
    "WeightedGraph",
    "GraphError",
    "enumerate_graph",
    "pointwise",
    "lattice_box",
    "path_graph",
    "single_vertex",
    "glue",
    "glue_unweighted",
    "dump_graph",
]

Predicate = Callable[[np.ndarray], np.ndarray]

SIDE_NONE, SIDE_E, SIDE_O = 0, 1, 2
_SIDE_NAMES = {SIDE_NONE: "none", SIDE_E: "e", SIDE_O: "o"}


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class BoxSpec:
    """Axis-aligned window; ``radius`` gives ``[-R, R]^d``, ``bounds`` per-axis ``(lo, hi)``."""

    radius: Optional[int] = None
    bounds: Optional[tuple[tuple[int, int], ...]] = None

    def __post_init__(self):
        if (self.radius is None) == (self.bounds is None):
            raise ValueError("give exactly one of radius or bounds")
        if self.radius is not None and self.radius < 1:
            raise ValueError(f"box radius must be >= 1, got {self.radius}")
        if self.bounds is not None:
            for lo, hi in self.bounds:
                if lo > 0 or hi < 0 or lo >= hi:
                    raise ValueError(f"degenerate axis bounds {(lo, hi)}")

    def axis_bounds(self, d: int) -> tuple[tuple[int, int], ...]:
        if self.bounds is not None:
            if len(self.bounds) != d:
                raise ValueError(f"box has {len(self.bounds)} axes, graph has {d}")
            return self.bounds
        return ((-self.radius, self.radius),) * d

    def n_points(self, d: int) -> int:
        return int(np.prod([hi - lo + 1 for lo, hi in self.axis_bounds(d)], dtype=object))


@dataclass
class WeightedGraph:
    """Undirected weighted graph on lattice points.

    ``weights`` is a symmetric CSR matrix (a diagonal entry is a self-loop).
    ``boundary`` flags vertices whose neighbourhood was cut by the truncation
    window; walks are exact until they first stand on such a vertex.
    """

    coords: np.ndarray
    weights: sp.csr_matrix
    side: np.ndarray
    markers: dict = field(default_factory=dict)
    boundary: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.coords.shape[0]
        if self.weights.shape != (n, n):
            raise GraphError("weight matrix does not match vertex count")
        if self.boundary is None:
            self.boundary = np.zeros(n, dtype=bool)
        self.weights = self.weights.tocsr()
        self.weights.sort_indices()

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def degree(self) -> np.ndarray:
        return np.asarray(self.weights.sum(axis=1)).ravel()

    @property
    def n_edges(self) -> int:
        upper = sp.triu(self.weights, k=0)
        return int(upper.nnz)

    def edges(self):
        """Yield ``(i, j, w)`` with ``i <= j`` in index order."""
        upper = sp.triu(self.weights, k=0).tocoo()
        order = np.lexsort((upper.col, upper.row))
        for k in order:
            yield int(upper.row[k]), int(upper.col[k]), float(upper.data[k])

    def index_of(self, point: Sequence[int]) -> int:
        hit = np.flatnonzero(np.all(self.coords == np.asarray(point), axis=1))
        if not len(hit):
            raise KeyError(f"{tuple(point)} is not a vertex")
        return int(hit[0])

    def marker(self, name: str) -> int:
        try:
            return self.markers[name]
        except KeyError:
            raise GraphError(f"graph has no {name!r} marker") from None

    def distances(self, source: int) -> np.ndarray:
        """Hop distances from ``source`` (``-1`` when unreachable)."""
        order, pred = breadth_first_order(self.weights, source, directed=False)
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[source] = 0
        for v in order[1:]:
            dist[v] = dist[pred[v]] + 1
        return dist

    def exact_horizon(self, source: int) -> Optional[int]:
        """Largest ``t`` for which walks from ``source`` cannot feel the truncation.

        ``None`` when no cut vertex is reachable, i.e. the graph is complete
        as given.
        """
        dist = self.distances(source)
        cut = dist[self.boundary & (dist >= 0)]
        if not len(cut):
            return None
        return int(cut.min()) - 1

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        return connected_components(self.weights, directed=False)[0] == 1


def pointwise(fn: Callable[[Sequence[int]], bool]) -> Predicate:
    """Lift a scalar membership test to the array form ``enumerate_graph`` expects."""

    def pred(pts: np.ndarray) -> np.ndarray:
        return np.fromiter((bool(fn(tuple(p))) for p in pts), dtype=bool, count=len(pts))

    return pred


def _grid(bounds) -> np.ndarray:
    axes = [np.arange(lo, hi + 1) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def enumerate_graph(
    pred: Predicate, box: BoxSpec, d: int, side: int = SIDE_NONE, max_vertices: Optional[int] = None
) -> WeightedGraph:
    """Induced subgraph of Z^d on ``{p in box : pred(p)}``, restricted to the
    connected component of the origin.

    Vertices come out in lexicographic coordinate order.
    """
    bounds = box.axis_bounds(d)
    if max_vertices is not None and box.n_points(d) > max_vertices:
        raise MemoryError(f"box holds {box.n_points(d)} points, budget is {max_vertices}")
    shape = tuple(hi - lo + 1 for lo, hi in bounds)
    pts = _grid(bounds)
    mask = np.asarray(pred(pts), dtype=bool).reshape(shape)
    origin = tuple(-lo for lo, _ in bounds)
    if not mask[origin]:
        raise GraphError("origin fails the membership predicate")

    flat_id = np.full(mask.size, -1, dtype=np.int64)
    flat_id[mask.ravel()] = np.arange(int(mask.sum()))
    ids = flat_id.reshape(shape)
    rows, cols = [], []
    for axis in range(d):
        lo_sl = [slice(None)] * d
        hi_sl = [slice(None)] * d
        lo_sl[axis] = slice(0, -1)
        hi_sl[axis] = slice(1, None)
        both = mask[tuple(lo_sl)] & mask[tuple(hi_sl)]
        rows.append(ids[tuple(lo_sl)][both])
        cols.append(ids[tuple(hi_sl)][both])
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    n_all = int(mask.sum())
    adj = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_all, n_all))
    adj = (adj + adj.T).tocsr()

    _, labels = connected_components(adj, directed=False)
    keep = labels == labels[ids[origin]]
    sub = adj[keep][:, keep].tocsr()
    coords = pts[mask.ravel()][keep]

    # A kept vertex is cut if some lattice neighbour lies outside the box
    # but would have passed the predicate.
    boundary = np.zeros(len(coords), dtype=bool)
    for axis, (lo, hi) in enumerate(bounds):
        for edge, step in ((lo, -1), (hi, 1)):
            on_face = coords[:, axis] == edge
            if not on_face.any():
                continue
            outside = coords[on_face].copy()
            outside[:, axis] += step
            boundary[np.flatnonzero(on_face)[np.asarray(pred(outside), dtype=bool)]] = True

    g = WeightedGraph(
        coords=coords,
        weights=sub,
        side=np.full(len(coords), side, dtype=np.int8),
        boundary=boundary,
    )
    g.markers["origin"] = g.index_of((0,) * d)
    if g.n == 1 and g.weights.nnz == 0:
        raise GraphError("origin is isolated; no walk can run on this graph")
    return g


def lattice_box(d: int, radius: int, side: int = SIDE_NONE) -> WeightedGraph:
    return enumerate_graph(lambda pts: np.ones(len(pts), dtype=bool), BoxSpec(radius), d, side)


def path_graph(n: int) -> WeightedGraph:
    """Path on ``0..n-1`` embedded in Z^1; the origin marker sits at vertex 0."""
    if n < 2:
        raise ValueError("a path needs at least two vertices")
    coords = np.arange(n).reshape(-1, 1)
    w = sp.diags([np.ones(n - 1), np.ones(n - 1)], [-1, 1], shape=(n, n), format="csr")
    g = WeightedGraph(coords, w, np.zeros(n, dtype=np.int8))
    g.markers["origin"] = 0
    return g


def single_vertex(loop: float = 0.0, d: int = 1) -> WeightedGraph:
    w = sp.csr_matrix(np.array([[loop]])) if loop else sp.csr_matrix((1, 1))
    g = WeightedGraph(np.zeros((1, d), dtype=np.int64), w, np.zeros(1, dtype=np.int8))
    g.markers["origin"] = 0
    return g


def _stack(g_e: WeightedGraph, g_o: WeightedGraph, extra: int = 0):
    if g_e.d != g_o.d:
        raise GraphError(f"halves live in different dimensions ({g_e.d} vs {g_o.d})")
    x = g_e.marker("origin")
    y = g_o.marker("origin") + g_e.n
    coords = np.vstack([g_e.coords, g_o.coords, np.zeros((extra, g_e.d), dtype=g_e.coords.dtype)])
    side = np.concatenate(
        [np.full(g_e.n, SIDE_E, np.int8), np.full(g_o.n, SIDE_O, np.int8), np.zeros(extra, np.int8)]
    )
    boundary = np.concatenate([g_e.boundary, g_o.boundary, np.zeros(extra, dtype=bool)])
    n = g_e.n + g_o.n + extra
    w = sp.block_diag([g_e.weights, g_o.weights, sp.csr_matrix((extra, extra))], format="coo")
    return x, y, coords, side, boundary, w, n


def _with_edges(w: sp.coo_matrix, pairs, weight: float) -> sp.csr_matrix:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([w.row, pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([w.col, pairs[:, 1], pairs[:, 0]])
    data = np.concatenate([w.data, np.full(2 * len(pairs), weight)])
    return sp.csr_matrix((data, (rows, cols)), shape=w.shape)


def glue(g_e: WeightedGraph, g_o: WeightedGraph, delta: float) -> WeightedGraph:
    """Disjoint union of the two halves plus one edge of weight ``delta`` between
    their origins, which become the markers ``x`` and ``y``."""
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"glue weight must lie in (0, 1], got {delta}")
    x, y, coords, side, boundary, w, _ = _stack(g_e, g_o)
    return WeightedGraph(coords, _with_edges(w, [(x, y)], delta), side, {"x": x, "y": y}, boundary)


def glue_unweighted(g_e: WeightedGraph, g_o: WeightedGraph, length: int) -> WeightedGraph:
    """Join the origins by a path of ``length`` unit edges through fresh vertices.

    The fresh vertices carry side tag ``none`` and coordinates 0; they are
    only addressable by index.
    """
    if length < 1:
        raise ValueError(f"segment length must be >= 1, got {length}")
    x, y, coords, side, boundary, w, n = _stack(g_e, g_o, extra=length - 1)
    chain = [x] + list(range(n - (length - 1), n)) + [y]
    pairs = list(itertools.pairwise(chain))
    return WeightedGraph(coords, _with_edges(w, pairs, 1.0), side, {"x": x, "y": y}, boundary)


def dump_graph(g: WeightedGraph) -> str:
    """Text dump: header ``d n m``, vertex lines ``id coords... side``, edge lines ``i j w``."""
    out = [f"{g.d} {g.n} {g.n_edges}"]
    for i in range(g.n):
        coords = " ".join(str(int(c)) for c in g.coords[i])
        out.append(f"{i} {coords} {_SIDE_NAMES[int(g.side[i])]}")
    for i, j, w in g.edges():
        out.append(f"{i} {j} {w:.17g}")
    return "\n".join(out) + "\n"
