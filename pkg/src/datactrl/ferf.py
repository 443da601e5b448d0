"""Controllability as shortest paths on a finite reachability graph.

Vertices are the deduplicated states {x_i} + {x'_i} + {x_T}; a directed
edge goes from each x_i to its successor x'_i, and a pair of vertices
within epsilon of each other is linked both ways (states that close are
interchangeable at tolerance epsilon).  A dataset state is controllable to
x_T exactly when the hop count to the x_T vertex is finite.

Hop counts use uint32 with a saturating infinity sentinel.  Two path
solvers are provided: Floyd-Warshall over the full matrix (all pairs) and
a reverse Dijkstra/BFS from the target (single column), which agree
exactly and are cross-tested.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import neighbors
from .core import DataError, Dataset, State, as_state

INF_HOPS = np.uint32(np.iinfo(np.uint32).max)

# Above this vertex count the pairwise proximity scan switches to spatial
# index queries; both paths produce identical edges.
_SCAN_LIMIT = 2000

_BIG = np.int64(1) << 31


@dataclass(eq=False)
class ReachGraph:
    vertices: np.ndarray  # (L, d)
    adj: list[np.ndarray]  # sorted unique out-neighbors per vertex
    state_vids: np.ndarray  # (N,) vertex id of each sample state
    succ_vids: np.ndarray  # (N,) vertex id of each sample successor
    target_vid: int
    epsilon: float
    link_radius: float

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return int(sum(a.shape[0] for a in self.adj))


@dataclass(eq=False)
class DistanceMatrix:
    hops: np.ndarray  # (L, L) uint32, INF_HOPS where unreachable


def _dedup(rows: np.ndarray, table: dict, order: list) -> np.ndarray:
    vids = np.empty(rows.shape[0], dtype=np.int64)
    for i, row in enumerate(rows):
        key = tuple(row.tolist())
        vid = table.get(key)
        if vid is None:
            vid = len(order)
            table[key] = vid
            order.append(row)
        vids[i] = vid
    return vids


def _proximity_pairs(verts: np.ndarray, radius: float, scan_limit: int = _SCAN_LIMIT):
    """(i, j) pairs with i != j and d(v_i, v_j) <= radius, both directions."""
    L = verts.shape[0]
    if L <= scan_limit:
        diff = verts[:, None, :] - verts[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(d, np.inf)
        ii, jj = np.nonzero(d <= radius)
        return ii.astype(np.int64), jj.astype(np.int64)
    index = neighbors.build(verts)
    src, dst = [], []
    for i in range(L):
        hit = neighbors.query_radius(index, verts[i], radius)
        hit = hit[hit != i]
        if hit.size:
            src.append(np.full(hit.shape[0], i, dtype=np.int64))
            dst.append(hit)
    if not src:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(src), np.concatenate(dst)


def build_graph(ds: Dataset, x_T, epsilon: float, *, link_radius: float | None = None,
                scan_limit: int = _SCAN_LIMIT) -> ReachGraph:
    """Assemble the reachability graph for a dataset and target.

    ``link_radius`` decouples the proximity-edge radius from the target
    tolerance epsilon; by default they coincide.
    """
    target = as_state(x_T)
    if target.shape[0] != ds.state_dim:
        raise DataError(f"target dimension {target.shape[0]} does not match dataset")
    if not epsilon > 0:
        raise DataError(f"epsilon must be positive, got {epsilon}")
    link = epsilon if link_radius is None else float(link_radius)
    if link < 0:
        raise DataError(f"link radius must be >= 0, got {link}")
    table: dict = {}
    order: list = []
    state_vids = _dedup(ds.xs, table, order)
    succ_vids = _dedup(ds.x_next, table, order)
    tvid = int(_dedup(target[None, :], table, order)[0])
    verts = np.stack(order)
    verts.flags.writeable = False
    L = verts.shape[0]
    src = [state_vids]
    dst = [succ_vids]
    pi, pj = _proximity_pairs(verts, link, scan_limit)
    src.append(pi)
    dst.append(pj)
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    keep = src != dst  # self-loops carry no information
    src, dst = src[keep], dst[keep]
    adj: list[np.ndarray] = []
    order_edges = np.lexsort((dst, src))
    src, dst = src[order_edges], dst[order_edges]
    starts = np.searchsorted(src, np.arange(L + 1))
    for v in range(L):
        adj.append(np.unique(dst[starts[v] : starts[v + 1]]))
    return ReachGraph(verts, adj, state_vids, succ_vids, tvid, float(epsilon), link)


def floyd_all_pairs(g: ReachGraph) -> DistanceMatrix:
    """All-pairs hop counts by min-plus relaxation over every pivot vertex."""
    L = g.n_vertices
    D = np.full((L, L), _BIG, dtype=np.int64)
    np.fill_diagonal(D, 0)
    for v in range(L):
        if g.adj[v].size:
            D[v, g.adj[v]] = 1
    for k in range(L):
        via = D[:, k : k + 1] + D[k : k + 1, :]
        np.minimum(D, via, out=D)
    hops = D.astype(np.uint32)
    hops[D >= _BIG] = INF_HOPS
    return DistanceMatrix(hops)


def _reverse_adj(g: ReachGraph) -> list[list[int]]:
    rev: list[list[int]] = [[] for _ in range(g.n_vertices)]
    for v, outs in enumerate(g.adj):
        for w in outs.tolist():
            rev[w].append(v)
    return rev


def dijkstra_to_target(g: ReachGraph, x_T=None) -> np.ndarray:
    """Hop count from every vertex to the target vertex (uint32, INF_HOPS).

    Unit edge weights make this a Dijkstra whose priority queue degenerates
    to breadth-first order, run over the reversed graph from the target.
    """
    tvid = g.target_vid
    if x_T is not None:
        target = as_state(x_T)
        if not np.array_equal(target, g.vertices[tvid]):
            raise DataError("x_T is not the target vertex of this graph")
    rev = _reverse_adj(g)
    dist = np.full(g.n_vertices, np.iinfo(np.int64).max, dtype=np.int64)
    dist[tvid] = 0
    pq = [(0, tvid)]
    while pq:
        d, v = heapq.heappop(pq)
        if d > dist[v]:
            continue
        nd = d + 1
        for w in rev[v]:
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(pq, (nd, w))
    out = np.full(g.n_vertices, INF_HOPS, dtype=np.uint32)
    ok = dist < np.iinfo(np.int64).max
    out[ok] = dist[ok].astype(np.uint32)
    return out


def ferf_controllable(ds: Dataset, x_T, epsilon: float, *, link_radius: float | None = None,
                      graph: ReachGraph | None = None) -> frozenset[int]:
    """Dataset indices whose state has a finite-hop route into B(x_T, eps)."""
    g = graph if graph is not None else build_graph(ds, x_T, epsilon, link_radius=link_radius)
    hops = dijkstra_to_target(g)
    fin = hops[g.state_vids] != INF_HOPS
    return frozenset(int(i) for i in np.flatnonzero(fin))


class TargetSweeper:
    """Shared-core evaluator for many targets at one epsilon.

    The dataset part of the graph does not depend on the target, so it is
    built once; each target is attached as a virtual extra vertex whose
    incoming proximity edges are found with one index query.  Controllable
    sets agree with per-target ``ferf_controllable`` (finiteness is
    unaffected by the extra proximity hop through the virtual vertex).
    """

    def __init__(self, ds: Dataset, epsilon: float, link_radius: float | None = None):
        if not epsilon > 0:
            raise DataError(f"epsilon must be positive, got {epsilon}")
        self.ds = ds
        self.epsilon = float(epsilon)
        self.link = float(link_radius) if link_radius is not None else float(epsilon)
        table: dict = {}
        order: list = []
        self.state_vids = _dedup(ds.xs, table, order)
        succ_vids = _dedup(ds.x_next, table, order)
        self.verts = np.stack(order)
        L = self.verts.shape[0]
        rev: list[list[int]] = [[] for _ in range(L)]
        for i in range(len(ds)):
            a, b = int(self.state_vids[i]), int(succ_vids[i])
            if a != b:
                rev[b].append(a)
        pi, pj = _proximity_pairs(self.verts, self.link)
        for a, b in zip(pi.tolist(), pj.tolist()):
            rev[b].append(a)
        self.rev = [sorted(set(v)) for v in rev]
        self.vert_index = neighbors.build(self.verts)

    def controllable(self, x_T) -> frozenset[int]:
        target = as_state(x_T)
        near = neighbors.query_radius(self.vert_index, target, self.link)
        # BFS from the virtual target through the reversed graph
        seen = np.zeros(self.verts.shape[0], dtype=bool)
        frontier = [int(v) for v in near]
        for v in frontier:
            seen[v] = True
        while frontier:
            nxt = []
            for v in frontier:
                for w in self.rev[v]:
                    if not seen[w]:
                        seen[w] = True
                        nxt.append(w)
            frontier = nxt
        fin = seen[self.state_vids]
        return frozenset(int(i) for i in np.flatnonzero(fin))
