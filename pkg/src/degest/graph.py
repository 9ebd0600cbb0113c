"""
Undirected simple graphs, random generators and edge-list IO.

Graphs are stored as a sorted array of unique edges ``(u, v)`` with
``u < v``.  Adjacency matrices are built lazily as ``scipy.sparse`` CSR.
"""
from __future__ import annotations

import io
import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Graph",
    "EdgeListError",
    "PowerLawError",
    "PowerLawDesign",
    "from_edges",
    "generate_er",
    "power_law_pmf",
    "power_law_mean",
    "power_law_degree_sequence",
    "configuration_model",
    "design_power_law",
    "generate_power_law",
    "load_edge_list",
    "write_edge_list",
    "degree_vector",
    "common_neighbor_matrix",
]


class EdgeListError(ValueError):
    """Malformed edge-list input; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PowerLawError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph on nodes ``0..num_nodes-1``."""

    num_nodes: int
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.bincount(self.edges.ravel(), minlength=self.num_nodes)
        deg.setflags(write=False)
        return deg

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        n = self.num_nodes
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(u), dtype=np.int64)
        return sp.csr_matrix(
            (data, (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n)
        )

    @property
    def sparsity(self) -> float:
        """Edge count over the number of node pairs."""
        pairs = self.num_nodes * (self.num_nodes - 1) / 2
        return self.num_edges / pairs if pairs else 0.0

    def neighbors(self, node: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[node]:a.indptr[node + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u, v])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.num_nodes == other.num_nodes and np.array_equal(self.edges, other.edges)

    __hash__ = None


def _canonical(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    pairs = np.stack([lo, hi], axis=1)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def from_edges(num_nodes: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Build a graph from an edge iterable, rejecting loops and duplicates."""
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64).reshape(-1, 2)
    if len(arr) and (arr.min() < 0 or arr.max() >= num_nodes):
        raise ValueError("edge endpoint out of range")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("self-loops are not allowed")
    pairs = _canonical(arr[:, 0], arr[:, 1])
    if len(pairs) > 1 and np.any(np.all(pairs[1:] == pairs[:-1], axis=1)):
        raise ValueError("duplicate edges are not allowed")
    return Graph(num_nodes, pairs)


def _simplify(num_nodes: int, u: np.ndarray, v: np.ndarray) -> Graph:
    """Drop self-loops and collapse multi-edges."""
    keep = u != v
    pairs = _canonical(u[keep], v[keep])
    if len(pairs):
        pairs = np.unique(pairs, axis=0)
    return Graph(num_nodes, pairs)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def generate_er(N: int, p_e: float, seed: int) -> Graph:
    """Erdos-Renyi G(N, p_e): every unordered pair joined independently.

    Row ``i`` consumes ``N - 1 - i`` uniforms, so the draw is a fixed
    function of ``seed``.
    """
    if not 0.0 <= p_e <= 1.0:
        raise ValueError(f"p_e must lie in [0, 1], got {p_e}")
    if N < 0:
        raise ValueError("N must be non-negative")
    rng = np.random.default_rng(seed)
    us, vs = [], []
    for i in range(N - 1):
        hits = np.flatnonzero(rng.random(N - 1 - i) < p_e)
        if len(hits):
            us.append(np.full(len(hits), i, dtype=np.int64))
            vs.append(hits + i + 1)
    if not us:
        return Graph(N, np.empty((0, 2), dtype=np.int64))
    return Graph(N, np.stack([np.concatenate(us), np.concatenate(vs)], axis=1))


def power_law_pmf(m: float, d_min: int, d_max: int) -> np.ndarray:
    """Normalised pmf proportional to ``d**-m`` on ``d_min..d_max``."""
    d = np.arange(d_min, d_max + 1, dtype=float)
    w = d ** -m
    return w / w.sum()


def power_law_mean(m: float, d_min: int, d_max: int) -> float:
    d = np.arange(d_min, d_max + 1, dtype=float)
    return float(np.dot(d, power_law_pmf(m, d_min, d_max)))


def power_law_degree_sequence(N: int, m: float, d_min: int, d_max: int,
                              rng: np.random.Generator) -> np.ndarray:
    """Draw ``N`` iid degrees from the truncated power law with an even sum.

    Parity is fixed by redrawing the last entry, leaving the other
    ``N - 1`` draws untouched.
    """
    support = np.arange(d_min, d_max + 1)
    pmf = power_law_pmf(m, d_min, d_max)
    seq = rng.choice(support, size=N, p=pmf)
    if seq.sum() % 2:
        if len(support) == 1:
            # single odd support value with odd N: no redraw can help
            seq[-1] += 1 if seq[-1] < N - 1 else -1
        else:
            rest = seq[:-1].sum() % 2
            while (rest + seq[-1]) % 2:
                seq[-1] = rng.choice(support, p=pmf)
    return seq


def configuration_model(degrees: np.ndarray, rng: np.random.Generator) -> Graph:
    """Random stub matching; self-loops and multi-edges are erased."""
    degrees = np.asarray(degrees, dtype=np.int64)
    if degrees.sum() % 2:
        raise ValueError("degree sum must be even")
    stubs = np.repeat(np.arange(len(degrees)), degrees)
    stubs = rng.permutation(stubs)
    return _simplify(len(degrees), stubs[0::2], stubs[1::2])


@dataclass(frozen=True)
class PowerLawDesign:
    """A realised power-law graph plus the pmf it was drawn from."""

    graph: Graph
    m: float
    d_min: int
    d_max: int
    target_sparsity: float
    attempts: int

    @property
    def realized_sparsity(self) -> float:
        return self.graph.sparsity


def _support_for_mean(m: float, target: float, N: int) -> tuple[int, int]:
    # smallest d_min whose full-range mean reaches the target, then the
    # d_max whose mean is closest to it
    top = max(N - 1, 1)
    d_min = None
    for cand in range(1, top + 1):
        if power_law_mean(m, cand, top) >= target:
            d_min = cand
            break
    if d_min is None:
        return top, top
    lo, hi = d_min, top
    while lo < hi:
        mid = (lo + hi) // 2
        if power_law_mean(m, d_min, mid) >= target:
            hi = mid
        else:
            lo = mid + 1
    d_max = lo
    if d_max > d_min and (abs(power_law_mean(m, d_min, d_max - 1) - target)
                          < abs(power_law_mean(m, d_min, d_max) - target)):
        d_max -= 1
    return d_min, d_max


def design_power_law(N: int, exponent_m: float, target_sparsity_s: float, seed: int,
                     tolerance: float = 0.10, max_attempts: int = 25) -> PowerLawDesign:
    """Configuration-model graph whose degrees follow ``d**-m`` on a tuned support.

    The support ``[d_min, d_max]`` is chosen so the pmf mean matches the
    mean degree implied by ``target_sparsity_s``; the target is then
    rescaled by the realised/target ratio until erasure losses are
    absorbed and the realised sparsity is within ``tolerance`` (relative).
    """
    if exponent_m <= 1:
        raise ValueError("exponent_m must exceed 1")
    if not 0 < target_sparsity_s < 1:
        raise ValueError("target_sparsity_s must lie in (0, 1)")
    if N < 2:
        raise ValueError("N must be at least 2")
    mean_target = target_sparsity_s * (N - 1)
    goal = mean_target
    tried = []
    for attempt in range(max_attempts):
        d_min, d_max = _support_for_mean(exponent_m, goal, N)
        rng = np.random.default_rng([seed, attempt])
        seq = power_law_degree_sequence(N, exponent_m, d_min, d_max, rng)
        g = configuration_model(seq, rng)
        ratio = g.sparsity / target_sparsity_s
        tried.append((d_min, d_max, round(g.sparsity, 6)))
        if abs(ratio - 1) <= tolerance:
            return PowerLawDesign(g, exponent_m, d_min, d_max, target_sparsity_s, attempt + 1)
        if ratio <= 0:
            goal *= 2
        else:
            goal = goal / ratio ** 0.5 if attempt > 10 else goal / ratio
    raise PowerLawError(
        f"no support reached sparsity {target_sparsity_s} within {tolerance:.0%} "
        f"for N={N}, m={exponent_m}; tried (d_min, d_max, sparsity): {tried}"
    )


def generate_power_law(N: int, exponent_m: float, target_sparsity_s: float,
                       seed: int) -> Graph:
    return design_power_law(N, exponent_m, target_sparsity_s, seed).graph


# ---------------------------------------------------------------------------
# Edge-list IO
# ---------------------------------------------------------------------------

_HEADER = re.compile(r"^#\s*nodes\s*=\s*(\d+)\s*$")
_BLOCK = 1 << 18


def _parse_line(text: str, lineno: int) -> tuple[int, int] | None:
    stripped = text.strip()
    if not stripped:
        return None
    tokens = stripped.split()
    if len(tokens) != 2:
        raise EdgeListError(f"expected 2 node ids, got {len(tokens)} tokens", lineno)
    try:
        u, v = int(tokens[0]), int(tokens[1])
    except ValueError:
        raise EdgeListError(f"malformed node id in {stripped!r}", lineno) from None
    if u < 0 or v < 0 or not (tokens[0].isdigit() and tokens[1].isdigit()):
        raise EdgeListError(f"node ids must be non-negative integers: {stripped!r}", lineno)
    if u == v:
        raise EdgeListError(f"self-loop on node {u}", lineno)
    return u, v


def _text_lines(source) -> Iterable[str]:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    if hasattr(source, "read"):
        return io.TextIOWrapper(source, encoding="utf-8")
    raise TypeError("source must be a byte stream, text stream, or bytes")


def load_edge_list(source: IO[bytes] | IO[str] | bytes) -> Graph:
    """Parse an edge list from a stream.

    Lines are consumed in blocks; edge-only blocks take a vectorised path
    and anything else (comments, headers, bad tokens) is parsed line by
    line so errors carry exact line numbers.
    """
    declared = None
    us, vs, linenos = [], [], []
    offset = 0
    lines = iter(_text_lines(source))
    while True:
        block = list(itertools.islice(lines, _BLOCK))
        if not block:
            break
        fast = None
        if not any(ln.lstrip().startswith("#") or not ln.strip() for ln in block):
            try:
                flat = np.array("".join(block).split(), dtype=np.int64)
            except ValueError:
                flat = None
            if flat is not None and len(flat) == 2 * len(block):
                fast = flat.reshape(-1, 2)
                if fast.min(initial=0) < 0:
                    fast = None
        if fast is not None:
            loops = np.flatnonzero(fast[:, 0] == fast[:, 1])
            if len(loops):
                raise EdgeListError(f"self-loop on node {fast[loops[0], 0]}",
                                    offset + int(loops[0]) + 1)
            us.append(fast[:, 0])
            vs.append(fast[:, 1])
            linenos.append(np.arange(offset + 1, offset + len(block) + 1, dtype=np.int64))
        else:
            bu, bv, bl = [], [], []
            for i, text in enumerate(block):
                lineno = offset + i + 1
                if text.lstrip().startswith("#"):
                    match = _HEADER.match(text.strip())
                    if match:
                        declared = int(match.group(1))
                    continue
                parsed = _parse_line(text, lineno)
                if parsed is not None:
                    bu.append(parsed[0])
                    bv.append(parsed[1])
                    bl.append(lineno)
            us.append(np.array(bu, dtype=np.int64))
            vs.append(np.array(bv, dtype=np.int64))
            linenos.append(np.array(bl, dtype=np.int64))
        offset += len(block)

    u = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    where = np.concatenate(linenos) if linenos else np.empty(0, dtype=np.int64)
    max_id = int(max(u.max(initial=-1), v.max(initial=-1)))
    n = max_id + 1
    if declared is not None:
        if declared < n:
            raise EdgeListError(f"header declares {declared} nodes but id {max_id} appears")
        n = declared

    lo, hi = np.minimum(u, v), np.maximum(u, v)
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]
    dup = np.flatnonzero((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1]))
    if len(dup):
        # report the later of the clashing lines
        first = max(where[order[dup[0]]], where[order[dup[0] + 1]])
        for k in dup[1:]:
            first = min(first, max(where[order[k]], where[order[k + 1]]))
        raise EdgeListError("duplicate edge", int(first))
    return Graph(n, np.stack([lo, hi], axis=1))


def write_edge_list(g: Graph, sink: IO[str], header: bool = True,
                    comments: Sequence[str] = ()) -> None:
    """Write ``g`` in the edge-list format read by :func:`load_edge_list`."""
    for c in comments:
        sink.write(f"# {c}\n")
    if header:
        sink.write(f"# nodes={g.num_nodes}\n")
    for start in range(0, g.num_edges, _BLOCK):
        chunk = g.edges[start:start + _BLOCK]
        sink.write("".join(f"{a} {b}\n" for a, b in chunk.tolist()))


# ---------------------------------------------------------------------------
# Degree statistics
# ---------------------------------------------------------------------------

def _check_nodes(g: Graph, nodes) -> np.ndarray:
    if nodes is None:
        return np.arange(g.num_nodes)
    nodes = np.asarray(nodes, dtype=np.int64).ravel()
    if len(nodes) and (nodes.min() < 0 or nodes.max() >= g.num_nodes):
        raise IndexError(f"node ids must lie in 0..{g.num_nodes - 1}")
    return nodes


def degree_vector(g: Graph, nodes=None) -> np.ndarray:
    """Degrees in ``g`` of ``nodes`` (all nodes when omitted)."""
    return np.asarray(g.degrees)[_check_nodes(g, nodes)]


def common_neighbor_matrix(g: Graph, nodes=None) -> np.ndarray:
    """Dense matrix with degrees on the diagonal and shared-neighbour counts off it.

    Computed as the adjacency square restricted to ``nodes``; neighbours are
    counted over the whole of ``g``.
    """
    nodes = _check_nodes(g, nodes)
    rows = g.adjacency[nodes]
    return (rows @ rows.T).toarray().astype(np.int64)
