"""Induced subgraph sampling with parent-id bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, common_neighbor_matrix, degree_vector

__all__ = [
    "SampleResult",
    "derive_seed",
    "inclusion_mask",
    "induced_subgraph",
    "induced_subgraph_sample",
    "observed_degrees",
    "write_sample",
    "load_sample",
]


def derive_seed(seed: int, *stream: int) -> int:
    """Child seed for a replicate or cell, independent of scheduling order."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), *map(int, stream)])
    return int(ss.generate_state(1, np.uint64)[0])


def inclusion_mask(num_nodes: int, p: float, seed: int) -> np.ndarray:
    """Bernoulli(p) inclusion flags for nodes ``0..num_nodes-1``.

    Philox is counter based: the uniform for node ``i`` depends only on
    ``seed`` and ``i``, never on how many other nodes are drawn.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    gen = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
    return gen.random(num_nodes) < p


@dataclass(frozen=True, eq=False)
class SampleResult:
    """Sampled subgraph re-indexed ``0..n-1`` with its map back to the parent.

    ``parent_num_nodes`` is the parent size N; several estimators treat it
    as known.
    """

    subgraph: Graph
    parent_ids: np.ndarray
    p: float
    parent_num_nodes: int | None = None
    _cn: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        ids = np.asarray(self.parent_ids, dtype=np.int64)
        ids.setflags(write=False)
        object.__setattr__(self, "parent_ids", ids)
        if len(ids) != self.subgraph.num_nodes:
            raise ValueError("parent_ids must have one entry per sampled node")

    @property
    def n(self) -> int:
        return self.subgraph.num_nodes

    @property
    def d_star(self) -> np.ndarray:
        return np.asarray(self.subgraph.degrees)

    @property
    def common_neighbors(self) -> np.ndarray:
        """Sampled common-neighbour matrix (cached)."""
        if "cn" not in self._cn:
            self._cn["cn"] = common_neighbor_matrix(self.subgraph)
        return self._cn["cn"]

    def true_degrees(self, parent: Graph) -> np.ndarray:
        return degree_vector(parent, self.parent_ids)

    def permuted(self, order) -> "SampleResult":
        """Same sample with sampled indices reordered by ``order``."""
        order = np.asarray(order, dtype=np.int64)
        inverse = np.empty_like(order)
        inverse[order] = np.arange(len(order))
        e = self.subgraph.edges
        sub = Graph(self.n, _sorted_pairs(inverse[e[:, 0]], inverse[e[:, 1]]))
        return SampleResult(sub, self.parent_ids[order], self.p, self.parent_num_nodes)


def _sorted_pairs(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    order = np.lexsort((hi, lo))
    return np.stack([lo[order], hi[order]], axis=1)


def induced_subgraph(g: Graph, keep: np.ndarray, p: float) -> SampleResult:
    """Subgraph of ``g`` induced by the boolean mask ``keep``."""
    keep = np.asarray(keep, dtype=bool)
    parent_ids = np.flatnonzero(keep)
    relabel = np.cumsum(keep) - 1
    e = g.edges
    both = keep[e[:, 0]] & keep[e[:, 1]] if len(e) else np.zeros(0, dtype=bool)
    sub_edges = relabel[e[both]]
    # parent edges are sorted with u < v and relabelling is monotone,
    # so sub_edges is already canonical
    return SampleResult(Graph(len(parent_ids), sub_edges), parent_ids, p, g.num_nodes)


def induced_subgraph_sample(g: Graph, p: float, seed: int) -> SampleResult:
    """Keep each node independently with probability ``p``; keep edges between kept nodes."""
    return induced_subgraph(g, inclusion_mask(g.num_nodes, p, seed), p)


def observed_degrees(s: SampleResult) -> np.ndarray:
    return s.d_star.copy()


def write_sample(s: SampleResult, sink) -> None:
    """Sample file: an edge list over sampled indices with bookkeeping headers.

    The file is also a valid plain edge list of the subgraph.
    """
    sink.write("# induced subgraph sample\n")
    sink.write(f"# p={s.p!r}\n")
    if s.parent_num_nodes is not None:
        sink.write(f"# parent_nodes={s.parent_num_nodes}\n")
    sink.write("# parent_ids=" + " ".join(map(str, s.parent_ids.tolist())) + "\n")
    sink.write(f"# nodes={s.n}\n")
    for a, b in s.subgraph.edges.tolist():
        sink.write(f"{a} {b}\n")


def load_sample(source) -> SampleResult:
    from .graph import load_edge_list

    text = source.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    meta = {}
    for line in text.splitlines():
        if line.startswith("#") and "=" in line:
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
    if "p" not in meta or "parent_ids" not in meta:
        raise ValueError("sample file lacks '# p=' or '# parent_ids=' header")
    g = load_edge_list(text.encode("utf-8"))
    ids = np.array(meta["parent_ids"].split(), dtype=np.int64)
    parent_n = int(meta["parent_nodes"]) if "parent_nodes" in meta else None
    return SampleResult(g, ids, float(meta["p"]), parent_n)
