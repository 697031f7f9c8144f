"""Graph representation, file IO, synthetic generators and edge-weight models.

Graphs are immutable once built: compressed adjacency (CSR-style arrays),
dense integer node ids, and a per-node sum of outgoing edge weights which
doubles as the raw node feature used everywhere downstream.  Undirected
graphs are stored as two directed arcs per edge, so the outgoing weight
sum reduces to the (weighted) degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParseError, UsageError

SIDE_A = 0
SIDE_B = 1


@dataclass(frozen=True, eq=False)
class Graph:
    """Weighted directed graph in compressed adjacency form.

    ``indptr``/``nbr``/``wt`` hold the outgoing arcs of node ``v`` in
    ``nbr[indptr[v]:indptr[v+1]]`` sorted by target id.  ``side`` marks
    bipartite instances (side A nodes may only point at side B nodes);
    it is None for general graphs.  ``orig_ids`` maps dense ids back to
    the ids found in the source file, for reporting only.
    """

    node_count: int
    directed: bool
    indptr: np.ndarray
    nbr: np.ndarray
    wt: np.ndarray
    out_weight_sum: np.ndarray
    side: np.ndarray | None = None
    orig_ids: np.ndarray | None = None
    _edge_ids: np.ndarray | None = field(default=None, repr=False, compare=False)
    _n_edges: int = field(default=-1, repr=False, compare=False)

    @property
    def arc_count(self) -> int:
        return int(self.nbr.shape[0])

    @property
    def edge_count(self) -> int:
        """Number of logical edges (arcs for directed, arc pairs otherwise)."""
        return self.arc_count if self.directed else self.arc_count // 2

    @property
    def bipartite(self) -> bool:
        return self.side is not None

    def out_degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @property
    def out_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.nbr[self.indptr[v] : self.indptr[v + 1]]

    def weights_of(self, v: int) -> np.ndarray:
        return self.wt[self.indptr[v] : self.indptr[v + 1]]

    def side_nodes(self, which: int) -> np.ndarray:
        if self.side is None:
            raise UsageError("graph is not bipartite")
        return np.flatnonzero(self.side == which)

    def edge_ids(self) -> tuple[np.ndarray, int]:
        """Per-arc logical edge id and the number of logical edges.

        For directed graphs each arc is its own edge.  For undirected
        graphs the two arcs of an edge share one id, so covering counts
        over edges rather than arcs.  Computed lazily and cached.
        """
        if self._edge_ids is not None:
            return self._edge_ids, self._n_edges
        if self.directed:
            ids = np.arange(self.arc_count, dtype=np.int64)
            n = self.arc_count
        else:
            src = np.repeat(np.arange(self.node_count), self.out_degrees)
            lo = np.minimum(src, self.nbr)
            hi = np.maximum(src, self.nbr)
            key = lo * np.int64(self.node_count) + hi
            _, ids = np.unique(key, return_inverse=True)
            ids = ids.astype(np.int64)
            n = int(ids.max()) + 1 if ids.size else 0
        object.__setattr__(self, "_edge_ids", ids)
        object.__setattr__(self, "_n_edges", n)
        return ids, n

    def check_invariants(self) -> None:
        """Recompute stored redundancies and verify them exactly."""
        if self.indptr.shape[0] != self.node_count + 1:
            raise DataError("indptr length mismatch")
        recomputed = _weight_sums(self.indptr, self.wt)
        if not np.array_equal(recomputed, self.out_weight_sum):
            raise DataError("out_weight_sum does not match adjacency")
        if self.wt.size and (self.wt.min() < 0.0 or self.wt.max() > 1.0):
            raise DataError("edge weight outside [0, 1]")
        if self.side is not None:
            src = np.repeat(np.arange(self.node_count), self.out_degrees)
            if np.any(self.side[src] != SIDE_A) or np.any(self.side[self.nbr] != SIDE_B):
                raise DataError("bipartite edge not A->B")


def _weight_sums(indptr: np.ndarray, wt: np.ndarray) -> np.ndarray:
    """Per-node sum of outgoing weights, summed in arc order."""
    if indptr.shape[0] <= 1:
        return np.zeros(max(0, indptr.shape[0] - 1), dtype=np.float64)
    padded = np.concatenate([wt, [0.0]])
    sums = np.add.reduceat(padded, indptr[:-1])
    return sums * (np.diff(indptr) > 0)


def _build(
    n: int,
    src: np.ndarray,
    dst: np.ndarray,
    wt: np.ndarray,
    directed: bool,
    side: np.ndarray | None = None,
    orig_ids: np.ndarray | None = None,
) -> Graph:
    """Assemble a Graph from arc triples, sorting arcs by (src, dst)."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    wt = np.asarray(wt, dtype=np.float64)
    order = np.lexsort((dst, src))
    src, dst, wt = src[order], dst[order], wt[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    ows = _weight_sums(indptr, wt)
    return Graph(
        node_count=n,
        directed=directed,
        indptr=indptr,
        nbr=dst,
        wt=wt,
        out_weight_sum=ows,
        side=side,
        orig_ids=orig_ids,
    )


def _dedupe_last_wins(u: np.ndarray, v: np.ndarray, w: np.ndarray):
    """Collapse duplicate (u, v) pairs keeping the weight seen last."""
    if u.size == 0:
        return u, v, w
    key = u.astype(np.int64) * (v.max() + 1 if v.size else 1) + v
    # stable sort keeps file order within a key; last occurrence wins
    order = np.argsort(key, kind="stable")
    key = key[order]
    keep = np.ones(key.size, dtype=bool)
    keep[:-1] = key[1:] != key[:-1]
    sel = order[keep]
    return u[sel], v[sel], w[sel]


def load_edge_list(path: str, directed: bool = True) -> Graph:
    """Load a whitespace-separated edge list.

    Lines are ``u v`` or ``u v w``; ``#`` starts a comment line.  Node
    ids are remapped to dense [0, n) in first-seen order, a missing
    weight defaults to 1.0, duplicate edges collapse keeping the last
    weight, and self-loops are dropped.

    Two structured comments written by :func:`write_edge_list` are
    honored when present: ``# nodes N`` fixes the node count (so isolated
    nodes survive; ids are then taken as already dense) and
    ``# side-a K`` marks the first K ids as the bipartite A side.
    """
    remap: dict[int, int] = {}
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []
    declared_nodes: int | None = None
    side_a: int | None = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open edge list {path!r}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "nodes":
                    declared_nodes = int(parts[1])
                elif len(parts) == 2 and parts[0] == "side-a":
                    side_a = int(parts[1])
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ParseError(f"{path}:{lineno}: expected 'u v' or 'u v w', got {line!r}")
            try:
                a = int(parts[0])
                b = int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if not (0.0 <= w <= 1.0):
                raise DataError(f"{path}:{lineno}: weight {w} outside [0, 1]")
            if declared_nodes is not None:
                if not (0 <= a < declared_nodes and 0 <= b < declared_nodes):
                    raise DataError(
                        f"{path}:{lineno}: id outside declared range [0, {declared_nodes})"
                    )
            else:
                for node in (a, b):
                    if node not in remap:
                        remap[node] = len(remap)
                a, b = remap[a], remap[b]
            if a == b:
                continue
            us.append(a)
            vs.append(b)
            ws.append(w)
    n = declared_nodes if declared_nodes is not None else len(remap)
    u = np.asarray(us, dtype=np.int64)
    v = np.asarray(vs, dtype=np.int64)
    w = np.asarray(ws, dtype=np.float64)
    if directed:
        u, v, w = _dedupe_last_wins(u, v, w)
    else:
        # canonicalize pairs before dedupe so both orientations collide,
        # then mirror every kept edge into two arcs
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        lo, hi, w = _dedupe_last_wins(lo, hi, w)
        u = np.concatenate([lo, hi])
        v = np.concatenate([hi, lo])
        w = np.concatenate([w, w])
    side = None
    if side_a is not None:
        if n and not (0 < side_a <= n):
            raise DataError(f"{path}: side-a marker {side_a} outside [1, {n}]")
        side = np.full(n, SIDE_B, dtype=np.int8)
        side[:side_a] = SIDE_A
    if declared_nodes is not None:
        orig = np.arange(n, dtype=np.int64)
    else:
        orig = np.empty(n, dtype=np.int64)
        for o, d in remap.items():
            orig[d] = o
    return _build(n, u, v, w, directed, side=side, orig_ids=orig)


def write_edge_list(g: Graph, path: str) -> None:
    """Write the canonical edge list: ``u v w``, 17 significant digits.

    Undirected graphs emit each edge once with u <= v; directed graphs
    emit every arc.  Ids written are the dense ids.  A ``# nodes``
    marker preserves isolated nodes and a ``# side-a`` marker preserves
    the bipartite partition (sides must be contiguous, A first).
    """
    src = np.repeat(np.arange(g.node_count), g.out_degrees)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nodes {g.node_count}\n")
        if g.side is not None:
            na = int(np.count_nonzero(g.side == SIDE_A))
            if not np.all(g.side[:na] == SIDE_A) or np.any(g.side[na:] == SIDE_A):
                raise DataError("cannot serialize bipartite graph with interleaved sides")
            fh.write(f"# side-a {na}\n")
        for u, v, w in zip(src, g.nbr, g.wt):
            if not g.directed and u > v:
                continue
            fh.write(f"{u} {v} {w:.17g}\n")


@dataclass(frozen=True)
class WeightModel:
    """Edge-weight assignment model.

    ``constant`` sets every weight to 0.1, ``trivalency`` draws uniformly
    from {0.1, 0.01, 0.001}, ``unit`` sets every weight to 1.0.
    """

    variant: str
    rng_seed: int = 0

    VARIANTS = ("constant", "trivalency", "unit")
    TRIVALENCY = (0.1, 0.01, 0.001)

    def __post_init__(self) -> None:
        if self.variant not in self.VARIANTS:
            raise UsageError(f"unknown weight model {self.variant!r}")


def assign_weights(g: Graph, model: WeightModel) -> Graph:
    """Return a copy of ``g`` with weights replaced per the model."""
    if model.variant == "constant":
        wt = np.full(g.arc_count, 0.1)
    elif model.variant == "unit":
        wt = np.ones(g.arc_count)
    else:
        rng = np.random.default_rng(model.rng_seed)
        if g.directed:
            wt = rng.choice(WeightModel.TRIVALENCY, size=g.arc_count)
        else:
            # draw one value per undirected edge so both arcs agree
            ids, n_edges = g.edge_ids()
            per_edge = rng.choice(WeightModel.TRIVALENCY, size=n_edges)
            wt = per_edge[ids]
    return Graph(
        node_count=g.node_count,
        directed=g.directed,
        indptr=g.indptr,
        nbr=g.nbr,
        wt=wt,
        out_weight_sum=_weight_sums(g.indptr, wt),
        side=g.side,
        orig_ids=g.orig_ids,
    )


def gen_bp(n: int, p: float, seed: int) -> Graph:
    """Random bipartite graph: 20% of nodes on side A, the rest on side B,
    each A->B pair independently an edge with probability ``p``.
    Unit weights; arcs point A to B."""
    if n < 5:
        raise UsageError(f"gen_bp needs n >= 5, got {n}")
    if not (0.0 <= p <= 1.0):
        raise UsageError(f"edge probability {p} outside [0, 1]")
    na = int(0.2 * n)
    nb = n - na
    rng = np.random.default_rng(seed)
    mask = rng.random((na, nb)) < p
    a_idx, b_idx = np.nonzero(mask)
    side = np.full(n, SIDE_B, dtype=np.int8)
    side[:na] = SIDE_A
    return _build(
        n,
        a_idx.astype(np.int64),
        b_idx.astype(np.int64) + na,
        np.ones(a_idx.size),
        directed=True,
        side=side,
    )


def gen_ba(n: int, m_attach: int = 4, seed: int = 0) -> Graph:
    """Undirected Barabasi-Albert graph via the repeated-nodes urn.

    Starts from m_attach isolated nodes; each new node attaches to
    m_attach distinct existing nodes sampled degree-proportionally, so
    the edge count is exactly m_attach * (n - m_attach).
    """
    if m_attach < 1 or n <= m_attach:
        raise UsageError(f"gen_ba needs n > m_attach >= 1, got n={n} m={m_attach}")
    rng = np.random.default_rng(seed)
    urn: list[int] = []
    targets = list(range(m_attach))
    us: list[int] = []
    vs: list[int] = []
    for source in range(m_attach, n):
        us.extend([source] * m_attach)
        vs.extend(targets)
        urn.extend(targets)
        urn.extend([source] * m_attach)
        picked: set[int] = set()
        while len(picked) < m_attach:
            picked.add(urn[int(rng.integers(len(urn)))])
        targets = sorted(picked)
    u = np.asarray(us + vs, dtype=np.int64)
    v = np.asarray(vs + us, dtype=np.int64)
    return _build(n, u, v, np.ones(u.size), directed=False)


def to_bipartite(g: Graph) -> Graph:
    """Duplicate the node set into sides A and B; every arc (u, v)
    becomes an edge from u's A-copy to v's B-copy."""
    if g.bipartite:
        raise UsageError("graph is already bipartite")
    n = g.node_count
    src = np.repeat(np.arange(n), g.out_degrees)
    side = np.full(2 * n, SIDE_B, dtype=np.int8)
    side[:n] = SIDE_A
    return _build(2 * n, src, g.nbr + n, g.wt.copy(), directed=True, side=side)
