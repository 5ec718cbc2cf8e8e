"""Max-flow/min-cut over pixel graphs for the binary MRF energy.

The solver is an augmenting-path algorithm (Dinic: BFS level graph +
blocking flow) over float64 capacities with a small residual floor, so
integer-capacity instances are solved exactly. Arc order is fixed at
build time, making the cut deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DimensionMismatch, UnfittedModel
from .imagecore import TRIMAP_BG, TRIMAP_FG

RESIDUAL_FLOOR = 1e-12


class FlowGraph:
    """Directed flow network with a source and sink.

    Arcs are stored pairwise: arc 2i is forward, 2i+1 is its reverse.
    A graph instance is consumed by one solve (capacities are mutated).
    """

    def __init__(self, n_nodes: int, source: int, sink: int):
        self.n_nodes = n_nodes
        self.source = source
        self.sink = sink
        self._heads: list[np.ndarray] = []
        self._tails: list[np.ndarray] = []
        self._caps: list[np.ndarray] = []
        self._rev_caps: list[np.ndarray] = []

    def add_edges(self, u: np.ndarray, v: np.ndarray, cap: np.ndarray,
                  rev_cap: np.ndarray | None = None) -> None:
        """Add a batch of arcs u->v with given capacities.

        ``rev_cap`` adds capacity on the paired reverse arcs (used for
        the symmetric neighbor edges); terminal edges leave it zero.
        """
        cap = np.asarray(cap, dtype=np.float64)
        if np.any(cap < 0):
            raise ValueError("capacities must be >= 0")
        self._tails.append(np.asarray(u, dtype=np.int64))
        self._heads.append(np.asarray(v, dtype=np.int64))
        self._caps.append(cap)
        if rev_cap is None:
            rev_cap = np.zeros_like(cap)
        else:
            rev_cap = np.asarray(rev_cap, dtype=np.float64)
            if np.any(rev_cap < 0):
                raise ValueError("capacities must be >= 0")
        self._rev_caps.append(rev_cap)

    def add_edge(self, u: int, v: int, cap: float, rev_cap: float = 0.0) -> None:
        self.add_edges(np.array([u]), np.array([v]), np.array([cap]),
                       np.array([rev_cap]))

    def _build_csr(self):
        if self._tails:
            tails = np.concatenate(self._tails)
            heads = np.concatenate(self._heads)
            caps = np.concatenate(self._caps)
            rev_caps = np.concatenate(self._rev_caps)
        else:
            tails = np.empty(0, dtype=np.int64)
            heads = np.empty(0, dtype=np.int64)
            caps = np.empty(0)
            rev_caps = np.empty(0)
        m = len(tails)
        arc_to = np.empty(2 * m, dtype=np.int64)
        arc_cap = np.empty(2 * m)
        arc_to[0::2] = heads
        arc_to[1::2] = tails
        arc_cap[0::2] = caps
        arc_cap[1::2] = rev_caps
        arc_tail = np.empty(2 * m, dtype=np.int64)
        arc_tail[0::2] = tails
        arc_tail[1::2] = heads
        # CSR adjacency over all 2m arcs, stable in insertion order
        order = np.argsort(arc_tail, kind="stable")
        deg = np.bincount(arc_tail, minlength=self.n_nodes)
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        return indptr, order.astype(np.int64), arc_to, arc_cap

    def total_edges(self) -> int:
        return sum(len(t) for t in self._tails)

    def dump_edges(self, path) -> None:
        """Plain-text edge list for cross-checking with external solvers."""
        with open(path, "w") as f:
            f.write(f"{self.n_nodes} {self.source} {self.sink}\n")
            for tails, heads, caps in zip(self._tails, self._heads, self._caps):
                for u, v, c in zip(tails, heads, caps):
                    f.write(f"{u} {v} {c:.12g}\n")


@dataclass(frozen=True)
class CutResult:
    flow_value: float
    source_side: np.ndarray  # (n_nodes,) bool, True = SOURCE side


@njit(cache=True)
def _dinic(n, source, sink, indptr, adj, arc_to, arc_cap):
    level = np.empty(n, dtype=np.int64)
    it = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    # stack for iterative DFS: node and the arc taken to reach it
    path_arcs = np.empty(n, dtype=np.int64)
    total = 0.0
    while True:
        level[:] = -1
        level[source] = 0
        queue[0] = source
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                a = adj[k]
                v = arc_to[a]
                if level[v] < 0 and arc_cap[a] > RESIDUAL_FLOOR:
                    level[v] = level[u] + 1
                    queue[tail] = v
                    tail += 1
        if level[sink] < 0:
            break
        it[:] = indptr[:n]
        # repeatedly find augmenting paths in the level graph
        while True:
            u = source
            depth = 0
            found = False
            while True:
                if u == sink:
                    found = True
                    break
                advanced = False
                while it[u] < indptr[u + 1]:
                    a = adj[it[u]]
                    v = arc_to[a]
                    if arc_cap[a] > RESIDUAL_FLOOR and level[v] == level[u] + 1:
                        path_arcs[depth] = a
                        depth += 1
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if advanced:
                    continue
                # dead end: retreat
                level[u] = -1
                if depth == 0:
                    break
                depth -= 1
                a = path_arcs[depth]
                u = arc_to[a ^ 1]
                it[u] += 1
            if not found:
                break
            bottleneck = np.inf
            for i in range(depth):
                a = path_arcs[i]
                if arc_cap[a] < bottleneck:
                    bottleneck = arc_cap[a]
            for i in range(depth):
                a = path_arcs[i]
                arc_cap[a] -= bottleneck
                arc_cap[a ^ 1] += bottleneck
            total += bottleneck
    # residual reachability from source gives the min-cut partition
    side = np.zeros(n, dtype=np.bool_)
    side[source] = True
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(indptr[u], indptr[u + 1]):
            a = adj[k]
            v = arc_to[a]
            if not side[v] and arc_cap[a] > RESIDUAL_FLOOR:
                side[v] = True
                queue[tail] = v
                tail += 1
    return total, side


def max_flow(graph: FlowGraph) -> CutResult:
    """Solve the graph; returns the flow value and min-cut sides.

    The graph's capacities are consumed; do not solve twice.
    """
    indptr, adj, arc_to, arc_cap = graph._build_csr()
    total, side = _dinic(graph.n_nodes, graph.source, graph.sink,
                         indptr, adj, arc_to, arc_cap)
    return CutResult(flow_value=float(total), source_side=side)


def neighbor_pairs(h: int, w: int):
    """Index pairs and distances for the 8-connected grid (each pair once)."""
    idx = np.arange(h * w).reshape(h, w)
    out = []
    for dy, dx, dist in ((0, 1, 1.0), (1, 0, 1.0),
                         (1, 1, np.sqrt(2.0)), (1, -1, np.sqrt(2.0))):
        if dx >= 0:
            a = idx[: h - dy, : w - dx]
            b = idx[dy:, dx:]
        else:
            a = idx[: h - dy, -dx:]
            b = idx[dy:, :dx]
        out.append((a.ravel(), b.ravel(), dist))
    return out


def estimate_beta(lab: np.ndarray) -> float:
    """GrabCut convention: 1 / (2 * mean squared neighbor color difference)."""
    h, w = lab.shape[:2]
    flat = lab.reshape(-1, 3)
    total = 0.0
    count = 0
    for a, b, _dist in neighbor_pairs(h, w):
        d = flat[a] - flat[b]
        total += (d * d).sum()
        count += len(a)
    mean_sq = total / max(count, 1)
    if mean_sq <= 0:
        return 0.0
    return 1.0 / (2.0 * mean_sq)


def build_mrf_graph(lab: np.ndarray, fg_nll: np.ndarray, bg_nll: np.ndarray,
                    trimap: np.ndarray, lam: float, beta: float) -> FlowGraph:
    """Pixel-grid flow network for the FG/BG labeling energy.

    ``fg_nll``/``bg_nll`` are per-pixel negative log-likelihoods under
    the fitted color models. Source-side == FG. Definite trimap pixels
    get a constant K larger than any possible pairwise sum, making them
    hard constraints.
    """
    h, w = lab.shape[:2]
    if trimap.shape != (h, w) or fg_nll.shape != (h, w) or bg_nll.shape != (h, w):
        raise DimensionMismatch("trimap/likelihood dimensions must match image")
    if not (np.all(np.isfinite(fg_nll)) and np.all(np.isfinite(bg_nll))):
        raise UnfittedModel("non-finite likelihoods")
    n_pix = h * w
    source = n_pix
    sink = n_pix + 1
    g = FlowGraph(n_pix + 2, source, sink)

    flat = lab.reshape(-1, 3)
    pair_sums = np.zeros(n_pix)
    for a, b, dist in neighbor_pairs(h, w):
        d = flat[a] - flat[b]
        wgt = lam * np.exp(-beta * (d * d).sum(axis=1)) / dist
        g.add_edges(a, b, wgt, rev_cap=wgt)
        np.add.at(pair_sums, a, wgt)
        np.add.at(pair_sums, b, wgt)
    big_k = 1.0 + pair_sums.max() if n_pix else 1.0

    tri = trimap.ravel()
    # continuous densities can exceed 1, making a NLL negative; shifting
    # both terminal capacities of a pixel by a common amount keeps
    # capacities >= 0 without changing which labeling is optimal
    fg_term = fg_nll.ravel()
    bg_term = bg_nll.ravel()
    shift = np.maximum(0.0, -np.minimum(fg_term, bg_term))
    fg_term = fg_term + shift
    bg_term = bg_term + shift
    src_cap = np.where(tri == TRIMAP_FG, big_k,
                       np.where(tri == TRIMAP_BG, 0.0, bg_term))
    snk_cap = np.where(tri == TRIMAP_BG, big_k,
                       np.where(tri == TRIMAP_FG, 0.0, fg_term))
    pix = np.arange(n_pix)
    g.add_edges(np.full(n_pix, source), pix, src_cap)
    g.add_edges(pix, np.full(n_pix, sink), snk_cap)
    return g


def labeling_energy(lab: np.ndarray, fg_nll: np.ndarray, bg_nll: np.ndarray,
                    fg_mask: np.ndarray, lam: float, beta: float) -> float:
    """Energy of a labeling: data terms plus boundary smoothness terms.

    Matches the graph construction, so for all-unknown trimaps the min
    cut value equals the minimum of this energy.
    """
    h, w = lab.shape[:2]
    flat = lab.reshape(-1, 3)
    m = fg_mask.ravel()
    energy = float(np.where(m, fg_nll.ravel(), bg_nll.ravel()).sum())
    for a, b, dist in neighbor_pairs(h, w):
        d = flat[a] - flat[b]
        wgt = lam * np.exp(-beta * (d * d).sum(axis=1)) / dist
        energy += float(wgt[m[a] != m[b]].sum())
    return energy
