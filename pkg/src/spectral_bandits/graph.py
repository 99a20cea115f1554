"""Weighted undirected graphs, random generators and the edge-list format.

A :class:`Graph` stores its edges in canonical form: every edge as ``(u, v, w)``
with ``u < v``, sorted by ``(u, v)``. Generators own their random stream, so
two calls with equal arguments return equal graphs.
"""
from __future__ import annotations

import hashlib
import io
import os

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidArgument, ParseError, ValidationError

#: Largest node count a generator will produce; dense Laplacians beyond this
#: are out of reach anyway.
MAX_NODES = 2**31 - 1


class Graph:
    """Immutable weighted undirected graph without self-loops.

    Parameters
    ----------
    n : int
        Number of nodes; nodes are labelled ``0 .. n-1``.
    edges : iterable of (u, v, w)
        Each unordered pair may appear once. Weights must be finite and > 0.
    """

    __slots__ = ("_n", "_u", "_v", "_w")

    def __init__(self, n, edges=()):
        n = int(n)
        if n < 0:
            raise ValidationError(f"node count must be nonnegative, got {n}")
        arr = np.asarray(list(edges), dtype=float).reshape(-1, 3)
        u_raw, v_raw, w = arr[:, 0], arr[:, 1], arr[:, 2].copy()
        if not (np.all(u_raw == np.floor(u_raw)) and np.all(v_raw == np.floor(v_raw))):
            raise ValidationError("node indices must be integers")
        u_raw = u_raw.astype(np.int64)
        v_raw = v_raw.astype(np.int64)
        self._n = n
        self._u, self._v, self._w = _canonical(n, u_raw, v_raw, w)

    @classmethod
    def from_arrays(cls, n, u, v, w):
        """Build from parallel index/weight arrays (faster than tuples)."""
        g = cls.__new__(cls)
        g._n = int(n)
        if g._n < 0:
            raise ValidationError(f"node count must be nonnegative, got {n}")
        g._u, g._v, g._w = _canonical(
            g._n,
            np.asarray(u, dtype=np.int64).ravel(),
            np.asarray(v, dtype=np.int64).ravel(),
            np.asarray(w, dtype=float).ravel().copy(),
        )
        return g

    @property
    def n(self) -> int:
        return self._n

    @property
    def n_edges(self) -> int:
        return len(self._w)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for a, b, c in zip(self._u, self._v, self._w)]

    @property
    def edge_arrays(self):
        """Read-only ``(u, v, w)`` arrays in canonical order."""
        return self._u, self._v, self._w

    def degrees(self, weighted=True) -> np.ndarray:
        vals = self._w if weighted else np.ones_like(self._w)
        deg = np.zeros(self._n)
        np.add.at(deg, self._u, vals)
        np.add.at(deg, self._v, vals)
        return deg

    def adjacency(self) -> np.ndarray:
        """Dense symmetric weight matrix W."""
        adj = np.zeros((self._n, self._n))
        adj[self._u, self._v] = self._w
        adj[self._v, self._u] = self._w
        return adj

    def n_components(self) -> int:
        if self._n == 0:
            return 0
        mat = coo_matrix((self._w, (self._u, self._v)), shape=(self._n, self._n))
        count, _ = connected_components(mat, directed=False)
        return int(count)

    def is_connected(self) -> bool:
        return self.n_components() == 1

    def digest(self) -> str:
        """SHA-256 of the canonical edge-list text; used as a cache key."""
        buf = io.StringIO()
        save_edge_list(self, buf)
        return hashlib.sha256(buf.getvalue().encode("utf-8")).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self._n == other._n
            and np.array_equal(self._u, other._u)
            and np.array_equal(self._v, other._v)
            and np.array_equal(self._w, other._w)
        )

    def __hash__(self):
        return hash((self._n, self._u.tobytes(), self._v.tobytes(), self._w.tobytes()))

    def __repr__(self):
        return f"Graph(n={self._n}, n_edges={self.n_edges})"


def _canonical(n, u, v, w):
    if not (len(u) == len(v) == len(w)):
        raise ValidationError("edge arrays must have equal length")
    if len(w):
        if u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n:
            raise ValidationError(f"node index out of range [0, {n})")
        loops = np.flatnonzero(u == v)
        if len(loops):
            raise ValidationError(f"self-loop at node {int(u[loops[0]])}")
        bad = np.flatnonzero(~np.isfinite(w) | (w <= 0))
        if len(bad):
            raise ValidationError(
                f"edge ({int(u[bad[0]])}, {int(v[bad[0]])}) has non-positive or "
                f"non-finite weight {w[bad[0]]!r}"
            )
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    order = np.lexsort((hi, lo))
    lo, hi, w = lo[order], hi[order], w[order]
    dup = np.flatnonzero((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1]))
    if len(dup):
        raise ValidationError(f"duplicate edge ({int(lo[dup[0]])}, {int(hi[dup[0]])})")
    for arr in (lo, hi, w):
        arr.setflags(write=False)
    return lo, hi, w


def laplacian(g: Graph) -> np.ndarray:
    """Dense combinatorial Laplacian ``D - W``.

    The diagonal is assembled from the same weights as the off-diagonal part,
    so every row sums to zero up to one rounding per entry.
    """
    lap = -g.adjacency()
    lap[np.diag_indices(g.n)] = g.degrees()
    return lap


def _edge_weights(rng, count):
    # uniform on (0, 1]: never zero, so weights stay strictly positive
    return 1.0 - rng.random(count)


def gen_erdos_renyi(n: int, p: float, seed=None) -> Graph:
    """G(n, p) with each present edge weighted uniformly on (0, 1]."""
    if n <= 0:
        raise InvalidArgument(f"n must be positive, got {n}")
    if n > MAX_NODES:
        raise InvalidArgument(f"n={n} exceeds {MAX_NODES}")
    if not 0 < p <= 1:
        raise InvalidArgument(f"p must lie in (0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    iu, ju = iu[keep], ju[keep]
    return Graph.from_arrays(n, iu, ju, _edge_weights(rng, len(iu)))


def gen_barabasi_albert(n: int, m: int, seed=None) -> Graph:
    """Preferential attachment grown from an ``m``-node clique.

    Node ``t >= m`` attaches to ``m`` distinct earlier nodes drawn without
    replacement with probability proportional to their current (unweighted)
    degree. The result has ``m(m-1)/2 + m(n-m)`` edges.
    """
    if m < 1:
        raise InvalidArgument(f"m must be >= 1, got {m}")
    if m >= n:
        raise InvalidArgument(f"m must be < n, got m={m}, n={n}")
    if n > MAX_NODES:
        raise InvalidArgument(f"n={n} exceeds {MAX_NODES}")
    rng = np.random.default_rng(seed)
    us, vs = [], []
    for a in range(m):
        for b in range(a + 1, m):
            us.append(a)
            vs.append(b)
    degree = np.zeros(n)
    degree[:m] = m - 1
    for new in range(m, n):
        weights = degree[:new]
        total = weights.sum()
        probs = weights / total if total > 0 else None
        targets = rng.choice(new, size=m, replace=False, p=probs)
        for t in targets:
            us.append(int(t))
            vs.append(new)
        degree[targets] += 1
        degree[new] = m
    return Graph.from_arrays(n, us, vs, _edge_weights(rng, len(us)))


def gen_lattice(side: int, dims: int, seed=None) -> Graph:
    """Non-periodic ``dims``-dimensional grid with ``side**dims`` nodes.

    Node ``i`` has coordinates given by the base-``side`` digits of ``i``
    (last coordinate fastest).
    """
    if side < 2:
        raise InvalidArgument(f"side must be >= 2, got {side}")
    if dims < 1:
        raise InvalidArgument(f"dims must be >= 1, got {dims}")
    if side**dims > MAX_NODES:
        raise InvalidArgument(f"lattice size {side}^{dims} exceeds {MAX_NODES}")
    n = side**dims
    idx = np.arange(n).reshape((side,) * dims)
    us, vs = [], []
    for axis in range(dims):
        lo = [slice(None)] * dims
        hi = [slice(None)] * dims
        lo[axis] = slice(0, side - 1)
        hi[axis] = slice(1, side)
        us.append(idx[tuple(lo)].ravel())
        vs.append(idx[tuple(hi)].ravel())
    u = np.concatenate(us)
    v = np.concatenate(vs)
    rng = np.random.default_rng(seed)
    return Graph.from_arrays(n, u, v, _edge_weights(rng, len(u)))


def knn_graph(vectors, k: int) -> Graph:
    """Unit-weight graph joining each vector to its ``k`` Euclidean neighbours.

    An edge is present when either endpoint lists the other; distance ties are
    broken toward the lower index.
    """
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2:
        raise InvalidArgument("vectors must form a 2-d array (one row per item)")
    n = x.shape[0]
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    if k >= n:
        raise InvalidArgument(f"k must be < number of vectors ({n}), got {k}")
    sq = np.einsum("ij,ij->i", x, x)
    dist = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(dist, 0.0, out=dist)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = order.ravel()
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    return Graph.from_arrays(n, pairs[:, 0], pairs[:, 1], np.ones(len(pairs)))


def save_edge_list(g: Graph, sink) -> None:
    """Write ``g`` as ``n <count>`` followed by ``u v w`` lines.

    ``sink`` is a path or a writable text stream.
    """
    lines = [f"n {g.n}\n"]
    u, v, w = g.edge_arrays
    lines.extend(f"{a} {b} {c:.17g}\n" for a, b, c in zip(u.tolist(), v.tolist(), w.tolist()))
    if hasattr(sink, "write"):
        sink.writelines(lines)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.writelines(lines)


def load_edge_list(source) -> Graph:
    """Parse the edge-list format written by :func:`save_edge_list`."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(os.fspath(source), encoding="utf-8") as fh:
            text = fh.read()
    declared = None
    seen_data = False
    us, vs, ws, linenos = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if not seen_data and parts[0] == "n":
            seen_data = True
            if len(parts) != 2:
                raise ParseError(f"expected 'n <count>', got {line!r}", lineno)
            try:
                declared = int(parts[1])
            except ValueError:
                raise ParseError(f"bad node count {parts[1]!r}", lineno) from None
            if declared < 0:
                raise ParseError(f"negative node count {declared}", lineno)
            continue
        seen_data = True
        if len(parts) != 3:
            raise ParseError(f"expected 'u v w', got {line!r}", lineno)
        try:
            a, b, c = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"malformed edge {line!r}", lineno) from None
        if a == b:
            raise ValidationError(f"line {lineno}: self-loop at node {a}")
        if not np.isfinite(c) or c <= 0:
            raise ValidationError(f"line {lineno}: non-positive or non-finite weight {c!r}")
        if a < 0 or b < 0:
            raise ValidationError(f"line {lineno}: negative node index")
        us.append(a)
        vs.append(b)
        ws.append(c)
        linenos.append(lineno)
    n = declared if declared is not None else (max(max(us), max(vs)) + 1 if us else 0)
    if us and max(max(us), max(vs)) >= n:
        bad = next(i for i, (a, b) in enumerate(zip(us, vs)) if max(a, b) >= n)
        raise ValidationError(f"line {linenos[bad]}: node index exceeds declared count {n}")
    return Graph.from_arrays(n, us, vs, ws)

