"""
Weighted leader-follower digraphs, dwell-time switching schedules and the
connectivity checks built on them.

Node 0 is the leader, nodes 1..N are followers. The adjacency entry
a[i, j] > 0 means node i receives from node j (edge j -> i).
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy import linalg

from app.core.errors import ConnectivityError, TopologyError
from app.core.numkit import SPECTRUM_ATOL, as_matrix, spectrum

logger = logging.getLogger(__name__)

DWELL_ATOL = 1e-12

Edge = Tuple[int, int, float]


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """Weighted digraph over the leader (node 0) and N followers"""
    adjacency: np.ndarray
    undirected: bool = False

    def __post_init__(self):
        A = as_matrix(self.adjacency, "adjacency")
        if A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise TopologyError(f"adjacency must be square and non-empty, got {A.shape}")
        if np.any(A < 0):
            raise TopologyError("adjacency weights must be nonnegative")
        if np.any(np.diag(A) != 0):
            raise TopologyError("self loops are not allowed")
        if np.any(A[0, :] != 0):
            raise TopologyError("the leader (node 0) must not receive edges")
        if self.undirected and not np.array_equal(A[1:, 1:], A[1:, 1:].T):
            raise TopologyError("undirected graph has asymmetric follower weights")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @classmethod
    def from_edges(cls, follower_count: int, edges: Iterable[Edge], undirected: bool = False) -> "WeightedDigraph":
        """
        Build from (source, target, weight) triples.

        Undirected follower pairs are stored in both directions; an edge
        touching the leader always points away from it.
        """
        n = follower_count + 1
        A = np.zeros((n, n))
        for edge in edges:
            if len(edge) == 2:
                src, dst, weight = edge[0], edge[1], 1.0
            else:
                src, dst, weight = edge
            src, dst = int(src), int(dst)
            if not (0 <= src < n and 0 <= dst < n):
                raise TopologyError(f"edge ({src}, {dst}) references a node outside 0..{n - 1}")
            if src == dst:
                raise TopologyError(f"self loop on node {src}")
            if weight <= 0:
                raise TopologyError(f"edge ({src}, {dst}) must have positive weight, got {weight}")
            if dst == 0:
                if not undirected:
                    raise TopologyError(f"edge ({src}, 0) points into the leader")
                src, dst = 0, src
            A[dst, src] += weight
            if undirected and src != 0:
                A[src, dst] += weight
        return cls(A, undirected)

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    @property
    def follower_count(self) -> int:
        return self.node_count - 1

    @property
    def leader_weights(self) -> np.ndarray:
        """a_i0 for i = 1..N"""
        return self.adjacency[1:, 0].copy()

    def edges(self) -> List[Edge]:
        """(source, target, weight) triples; undirected follower pairs once"""
        out = []
        n = self.node_count
        for dst in range(n):
            for src in range(n):
                w = float(self.adjacency[dst, src])
                if w <= 0:
                    continue
                if self.undirected and src != 0 and src > dst:
                    continue
                out.append((src, dst, w))
        return sorted(out)

    def to_networkx(self, followers_only: bool = False) -> nx.DiGraph:
        G = nx.DiGraph()
        first = 1 if followers_only else 0
        G.add_nodes_from(range(first, self.node_count))
        for src, dst, w in self.edges():
            if followers_only and src == 0:
                continue
            G.add_edge(src, dst, weight=w)
            if self.undirected and src != 0:
                G.add_edge(dst, src, weight=w)
        return G

    def is_symmetric(self) -> bool:
        F = self.adjacency[1:, 1:]
        return bool(np.array_equal(F, F.T))


@dataclass(frozen=True, eq=False)
class HMatrix:
    """H = L + diag(a_10, ..., a_N0) for one graph"""
    matrix: np.ndarray
    graph_index: Optional[int] = None


def laplacian(G: WeightedDigraph, followers_only: bool = False) -> np.ndarray:
    A = G.adjacency[1:, 1:] if followers_only else G.adjacency
    return np.diag(A.sum(axis=1)) - A


def h_matrix(G: WeightedDigraph, graph_index: Optional[int] = None) -> HMatrix:
    return HMatrix(laplacian(G, followers_only=True) + np.diag(G.leader_weights), graph_index)


def union_graph(graphs: Sequence[WeightedDigraph]) -> WeightedDigraph:
    """Union with summed weights"""
    if not graphs:
        raise TopologyError("union of an empty graph family")
    sizes = {g.node_count for g in graphs}
    if len(sizes) != 1:
        raise TopologyError(f"graphs have mismatched node counts {sorted(sizes)}")
    total = sum(g.adjacency for g in graphs)
    return WeightedDigraph(total, all(g.undirected for g in graphs))


def reachable_from_leader(G: WeightedDigraph) -> bool:
    """Every follower is reachable from node 0 along directed edges"""
    if G.follower_count == 0:
        return True
    reached = nx.descendants(G.to_networkx(), 0)
    return len(reached) == G.follower_count


def has_spanning_tree(G: WeightedDigraph, followers_only: bool = True) -> bool:
    """The (follower) digraph has a node from which every other node is reachable"""
    graph = G.to_networkx(followers_only=followers_only)
    if graph.number_of_nodes() <= 1:
        return True
    condensed = nx.condensation(graph)
    roots = [c for c in condensed.nodes if condensed.in_degree(c) == 0]
    return len(roots) == 1


def min_real_eig_h(H: Union[HMatrix, np.ndarray]) -> float:
    """δ = min Re σ(H); raises ConnectivityError unless every real part is positive"""
    matrix = H.matrix if isinstance(H, HMatrix) else np.asarray(H, dtype=float)
    if matrix.size == 0:
        raise TopologyError("H matrix of an empty follower set")
    delta = spectrum(matrix).min_real
    if delta <= SPECTRUM_ATOL:
        raise ConnectivityError(
            f"H has an eigenvalue with real part {delta:.6g}; "
            "some follower is not reachable from the leader"
        )
    return float(delta)


def consensus_weights(G: WeightedDigraph) -> np.ndarray:
    """Nonnegative r with rᵀL = 0 and sum(r) = 1 on the follower graph"""
    L = laplacian(G, followers_only=True)
    if L.shape[0] == 1:
        return np.ones(1)
    basis = linalg.null_space(L.T, rcond=1e-10)
    if basis.shape[1] != 1:
        raise ConnectivityError(
            f"follower graph has {basis.shape[1]} independent consensus directions; "
            "it does not contain a spanning tree"
        )
    r = basis[:, 0]
    r = r / r.sum()
    if np.any(r < -1e-9):
        raise ConnectivityError("left null vector of the Laplacian is not sign-definite")
    return np.clip(r, 0.0, None)


def algebraic_connectivity(G: WeightedDigraph) -> float:
    """Smallest nonzero real part in σ(L) of the follower graph"""
    if not has_spanning_tree(G):
        raise ConnectivityError("follower graph does not contain a spanning tree")
    values = spectrum(laplacian(G, followers_only=True)).array
    positive = [z.real for z in values if z.real > SPECTRUM_ATOL]
    return float(min(positive)) if positive else math.inf


@dataclass(frozen=True, eq=False)
class SwitchingSchedule:
    """
    Piecewise-constant switching signal over a graph family.

    Graph `active[k]` is in force on [switch_times[k], switch_times[k+1]).
    With a `period` the pattern repeats; otherwise the last graph holds.
    """
    graphs: Tuple[WeightedDigraph, ...]
    switch_times: Tuple[float, ...]
    active: Tuple[int, ...]
    dwell: float
    period: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        object.__setattr__(self, "switch_times", tuple(float(t) for t in self.switch_times))
        object.__setattr__(self, "active", tuple(int(k) for k in self.active))
        if not self.graphs:
            raise TopologyError("schedule has no graphs")
        if len({g.node_count for g in self.graphs}) != 1:
            raise TopologyError("graphs in a schedule must share the node count")
        if not self.dwell > 0:
            raise TopologyError(f"dwell must be positive, got {self.dwell}")
        if not self.switch_times or self.switch_times[0] != 0.0:
            raise TopologyError("schedule must start at t = 0")
        if len(self.active) != len(self.switch_times):
            raise TopologyError("each switch time needs exactly one active graph index")
        for k in self.active:
            if not 0 <= k < len(self.graphs):
                raise TopologyError(f"active graph index {k} out of range 0..{len(self.graphs) - 1}")
        for a, b in zip(self.switch_times, self.switch_times[1:]):
            if b - a < self.dwell - DWELL_ATOL:
                raise TopologyError(f"switch at t={b:g} violates dwell {self.dwell:g} (previous t={a:g})")
        if self.period is not None:
            if self.period - self.switch_times[-1] < self.dwell - DWELL_ATOL:
                raise TopologyError(f"period {self.period:g} leaves less than one dwell after the last switch")

    @classmethod
    def static(cls, graph: WeightedDigraph, dwell: float = 1.0) -> "SwitchingSchedule":
        return cls((graph,), (0.0,), (0,), dwell)

    @property
    def follower_count(self) -> int:
        return self.graphs[0].follower_count

    @property
    def is_static(self) -> bool:
        return len(set(self.active)) == 1

    def index_at(self, t: float) -> int:
        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        if self.period is not None:
            t = math.fmod(t, self.period)
        k = bisect.bisect_right(self.switch_times, t) - 1
        return self.active[k]

    def graph_at(self, t: float) -> WeightedDigraph:
        return self.graphs[self.index_at(t)]

    def intervals(self, horizon: float) -> List[Tuple[float, float, int]]:
        """Constant-graph intervals (start, end, graph index) covering [0, horizon)"""
        out: List[Tuple[float, float, int]] = []
        if horizon <= 0:
            return out
        offset = 0.0
        while offset < horizon:
            times = list(self.switch_times)
            ends = times[1:] + [self.period if self.period is not None else math.inf]
            for start, end, k in zip(times, ends, self.active):
                a, b = offset + start, offset + end
                if a >= horizon:
                    break
                if out and out[-1][2] == k and out[-1][1] == a:
                    out[-1] = (out[-1][0], min(b, horizon), k)
                else:
                    out.append((a, min(b, horizon), k))
            if self.period is None:
                break
            offset += self.period
        return out

    def switch_instants(self, horizon: float) -> List[float]:
        return [a for a, _, _ in self.intervals(horizon)[1:]]

    def h_matrices(self) -> List[HMatrix]:
        return [h_matrix(g, p) for p, g in enumerate(self.graphs)]


@dataclass
class ConnectivityVerdict:
    certified: bool
    window: float
    windows: List[Tuple[float, float]] = field(default_factory=list)
    failing_window: Optional[Tuple[float, float]] = None

    def to_dict(self) -> dict:
        return {
            "certified": self.certified,
            "window": self.window,
            "windows_checked": len(self.windows),
            "failing_window": list(self.failing_window) if self.failing_window else None,
        }


def verify_jointly_connected(
    sched: SwitchingSchedule,
    window: float,
    horizon: Optional[float] = None,
) -> ConnectivityVerdict:
    """
    Greedy certification: tile [0, horizon) with windows of length `window`
    and require the union graph of each window to reach every follower.
    A failure means "not certified" and reports the first failing window.
    """
    if not window > 0:
        raise TopologyError(f"window must be positive, got {window}")
    if horizon is None:
        horizon = max(sched.switch_times[-1] + window, sched.period or 0.0)

    verdict = ConnectivityVerdict(certified=True, window=window)
    k = 0
    while k * window < horizon:
        a, b = k * window, (k + 1) * window
        members = {idx for start, end, idx in sched.intervals(b) if end > a and start < b}
        union = union_graph([sched.graphs[idx] for idx in sorted(members)])
        verdict.windows.append((a, b))
        if not reachable_from_leader(union):
            logger.debug("window [%g, %g) union does not reach every follower", a, b)
            verdict.certified = False
            verdict.failing_window = (a, b)
            break
        k += 1
    return verdict
