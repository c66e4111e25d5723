"""Sparse symmetric graphs: storage, file I/O, centrality, edge orderings.

Nodes are 0-based integers internally; the file formats use 1-based indices
(edge lists and Matrix-Market coordinate files both follow that convention).
Graphs are immutable: every modification returns a new object, so instances
are safe to share between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .errors import ConvergenceError, InputFormatError, ValidationError

__all__ = [
    "SparseSymGraph",
    "load_graph",
    "save_graph",
    "eigenvector_centrality",
    "Ordering",
    "Comparison",
    "CentralityRanking",
    "compare_edges",
    "Strategy",
    "SearchSpaceState",
    "select_search_space",
    "top_edges",
    "top_missing_pairs",
]


def normalize_pair(i, j):
    """Order a node pair as (min, max)."""
    return (i, j) if i < j else (j, i)


class SparseSymGraph:
    """Immutable undirected graph with strictly positive edge weights.

    The adjacency matrix is stored in CSR form, so matrix-vector products
    cost O(nnz). No self-loops, no duplicate edges; absence means weight 0.
    """

    __slots__ = ("n", "edges", "adjacency", "_wmap")

    def __init__(self, n: int, edges):
        if n < 1:
            raise ValidationError("graph must have at least one node")
        seen = {}
        for (i, j, w) in edges:
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError(f"node index out of range: ({i}, {j}) with n={n}")
            if i == j:
                raise ValidationError(f"self-loop at node {i} is not allowed")
            w = float(w)
            if w <= 0:
                raise ValidationError(f"edge ({i}, {j}) has non-positive weight {w}")
            pair = normalize_pair(i, j)
            if pair in seen:
                raise ValidationError(f"duplicate edge ({pair[0]}, {pair[1]})")
            seen[pair] = w
        self.n = int(n)
        self.edges = tuple(sorted((i, j, w) for (i, j), w in seen.items()))
        self._wmap = seen
        rows, cols, vals = [], [], []
        for i, j, w in self.edges:
            rows += [i, j]
            cols += [j, i]
            vals += [w, w]
        self.adjacency = scipy.sparse.csr_matrix(
            (vals, (rows, cols)), shape=(self.n, self.n), dtype=float
        )

    # -- basic queries -------------------------------------------------

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_pairs(self):
        """Edge endpoints (i, j) with i < j, in lexicographic order."""
        return tuple((i, j) for i, j, _ in self.edges)

    def edge_set(self) -> frozenset:
        return frozenset(self._wmap)

    def weight(self, i, j) -> float:
        return self._wmap.get(normalize_pair(i, j), 0.0)

    def has_edge(self, i, j) -> bool:
        return normalize_pair(i, j) in self._wmap

    def degrees(self) -> np.ndarray:
        """Unweighted node degrees (neighbor counts)."""
        deg = np.zeros(self.n, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def matvec(self, x):
        return self.adjacency @ x

    # -- modification (returns new graphs) -----------------------------

    def with_edge_delta(self, i, j, delta) -> "SparseSymGraph":
        """Return a copy with w(i, j) changed by ``delta``.

        The edge is dropped when the new weight is (numerically) zero;
        a negative result is rejected.
        """
        pair = normalize_pair(i, j)
        w_old = self._wmap.get(pair, 0.0)
        w_new = w_old + float(delta)
        wmap = dict(self._wmap)
        if abs(w_new) <= 1e-12 * max(1.0, abs(w_old)):
            wmap.pop(pair, None)
        elif w_new < 0:
            raise ValidationError(
                f"modification of ({pair[0]}, {pair[1]}) yields negative weight {w_new}"
            )
        else:
            wmap[pair] = w_new
        return SparseSymGraph(self.n, [(i, j, w) for (i, j), w in wmap.items()])

    def __repr__(self):
        return f"SparseSymGraph(n={self.n}, edges={self.num_edges})"


# ---------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------


def _parse_edge_list(path):
    edges = []
    nmax = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith(("%", "#")):
                continue
            toks = line.split()
            if len(toks) not in (2, 3):
                raise InputFormatError(
                    f"expected 'i j [w]', got {len(toks)} fields", path=path, line=lineno
                )
            try:
                i, j = int(toks[0]), int(toks[1])
                w = float(toks[2]) if len(toks) == 3 else 1.0
            except ValueError as exc:
                raise InputFormatError(f"cannot parse entry: {exc}", path=path, line=lineno)
            if i < 1 or j < 1:
                raise InputFormatError("node indices are 1-based", path=path, line=lineno)
            edges.append((i - 1, j - 1, w, lineno))
            nmax = max(nmax, i, j)
    return nmax, edges


def _parse_matrix_market(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("%%MatrixMarket"):
            raise InputFormatError("missing MatrixMarket header", path=path, line=1)
        fields = header.split()
        if len(fields) < 5 or fields[1].lower() != "matrix" or fields[2].lower() != "coordinate":
            raise InputFormatError("only 'matrix coordinate' files are supported", path=path, line=1)
        valtype = fields[3].lower()
        symmetry = fields[4].lower()
        if valtype not in ("real", "pattern", "integer"):
            raise InputFormatError(f"unsupported value type {valtype!r}", path=path, line=1)
        if symmetry != "symmetric":
            raise ValidationError(f"{path}: Matrix-Market file must use symmetric storage")
        lineno = 1
        dims = None
        edges = []
        for raw in fh:
            lineno += 1
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            toks = line.split()
            if dims is None:
                if len(toks) != 3:
                    raise InputFormatError("expected 'rows cols nnz'", path=path, line=lineno)
                try:
                    r, c, nnz = (int(t) for t in toks)
                except ValueError as exc:
                    raise InputFormatError(f"cannot parse size line: {exc}", path=path, line=lineno)
                if r != c:
                    raise ValidationError(f"{path}: adjacency matrix must be square, got {r}x{c}")
                dims = (r, nnz)
                continue
            want = 2 if valtype == "pattern" else 3
            if len(toks) != want:
                raise InputFormatError(
                    f"expected {want} fields per entry for {valtype} file", path=path, line=lineno
                )
            try:
                i, j = int(toks[0]), int(toks[1])
                w = float(toks[2]) if valtype != "pattern" else 1.0
            except ValueError as exc:
                raise InputFormatError(f"cannot parse entry: {exc}", path=path, line=lineno)
            edges.append((i - 1, j - 1, w, lineno))
        if dims is None:
            raise InputFormatError("missing size line", path=path, line=lineno)
        return dims[0], edges


def load_graph(path, fmt="auto") -> SparseSymGraph:
    """Read a graph from an edge list or a Matrix-Market coordinate file.

    Edge lists are whitespace-separated with 1-based indices and an optional
    weight column; comment lines start with '%' or '#'. Matrix-Market files
    must be coordinate/symmetric (real, integer or pattern). Each undirected
    edge must appear exactly once in either orientation; duplicates
    (including mirrored ones), self-loops and non-positive weights are
    rejected.
    """
    path = str(path)
    if fmt == "auto":
        fmt = "matrix-market" if path.lower().endswith((".mtx", ".mm")) else "edge-list"
    try:
        if fmt == "matrix-market":
            n, raw_edges = _parse_matrix_market(path)
        elif fmt == "edge-list":
            n, raw_edges = _parse_edge_list(path)
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise InputFormatError(f"cannot read file: {exc}", path=path)
    seen = {}
    for i, j, w, lineno in raw_edges:
        if i == j:
            raise ValidationError(f"{path}:{lineno}: self-loop at node {i + 1}")
        if w < 0:
            raise ValidationError(f"{path}:{lineno}: negative weight {w}")
        if w == 0:
            raise ValidationError(f"{path}:{lineno}: zero weight (omit the edge instead)")
        pair = normalize_pair(i, j)
        if pair in seen:
            raise ValidationError(
                f"{path}:{lineno}: duplicate entry for edge ({pair[0] + 1}, {pair[1] + 1})"
            )
        seen[pair] = w
    if not seen:
        raise ValidationError(f"{path}: no edges found")
    return SparseSymGraph(n, [(i, j, w) for (i, j), w in seen.items()])


def save_graph(g: SparseSymGraph, path) -> None:
    """Write an edge list (1-based, 17 significant digits) that round-trips bit-exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, w in g.edges:
            fh.write(f"{i + 1} {j + 1} {w:.17g}\n")


# ---------------------------------------------------------------------
# Eigenvector centrality
# ---------------------------------------------------------------------


def eigenvector_centrality(g: SparseSymGraph, tol=1e-8, max_iter=None) -> np.ndarray:
    """Perron eigenvector of the adjacency matrix, unit 2-norm, entrywise >= 0.

    Shifted power iteration on I + A/rho (rho = max row sum), which converges
    for connected graphs even when the spectrum is symmetric (bipartite
    graphs have a -lambda_max eigenvalue that defeats the unshifted
    iteration). The residual test ``||A x - lambda x|| <= tol * lambda`` is
    evaluated on the original matrix.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = g.n
    A = g.adjacency
    if max_iter is None:
        # 10n scales with problem size; the floor covers small graphs whose
        # iteration count is set by the spectral gap, not by n
        max_iter = max(10 * n, 500)
    rho = max(1.0, float(np.max(np.abs(A).sum(axis=1))))
    x = np.full(n, 1.0 / np.sqrt(n))
    resid = np.inf
    for _ in range(max_iter):
        ax = A @ x
        lam = float(x @ ax)
        resid = float(np.linalg.norm(ax - lam * x))
        if resid <= tol * abs(lam) + 1e-300:
            x = np.maximum(x, 0.0)
            return x / np.linalg.norm(x)
        y = x + ax / rho
        x = y / np.linalg.norm(y)
    raise ConvergenceError(
        "power iteration did not converge", residual=resid, iterations=max_iter
    )


class Ordering(enum.Enum):
    """Edge orderings induced by node centrality scores."""

    PRODUCT = "product"  # compare score products
    MINMAX = "minmax"    # compare (min score, max score) lexicographically


class Comparison(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True)
class CentralityRanking:
    """Node scores plus the ordering used to rank node pairs.

    ``scores`` must be entrywise nonnegative with unit 2-norm (as produced by
    :func:`eigenvector_centrality`).
    """

    scores: np.ndarray
    ordering: Ordering = Ordering.PRODUCT

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        object.__setattr__(self, "scores", s)
        if np.any(s < 0):
            raise ValidationError("centrality scores must be nonnegative")
        if abs(np.linalg.norm(s) - 1.0) > 1e-12:
            raise ValidationError("centrality scores must have unit 2-norm")

    @classmethod
    def from_graph(cls, g, ordering=Ordering.PRODUCT, tol=1e-8, max_iter=None):
        return cls(eigenvector_centrality(g, tol=tol, max_iter=max_iter), ordering)

    def key(self, pair):
        """Comparable ranking key of a node pair (larger key = more important)."""
        si = float(self.scores[pair[0]])
        sj = float(self.scores[pair[1]])
        if self.ordering is Ordering.PRODUCT:
            return (si * sj,)
        return (min(si, sj), max(si, sj))


def compare_edges(e1, e2, ranking: CentralityRanking) -> Comparison:
    """Compare two node pairs under the ranking; EQUAL on exact key ties."""
    k1, k2 = ranking.key(e1), ranking.key(e2)
    if k1 < k2:
        return Comparison.LESS
    if k1 > k2:
        return Comparison.GREATER
    return Comparison.EQUAL


def _sorted_desc(pairs, ranking):
    """Sort pairs by ranking key descending; ties by (min index, max index)."""
    return sorted(
        (normalize_pair(*p) for p in pairs),
        key=lambda p: tuple(-c for c in ranking.key(p)) + p,
    )


def top_edges(pairs, ranking: CentralityRanking, count: int):
    """The ``count`` most important pairs among ``pairs``, deterministic order."""
    return _sorted_desc(pairs, ranking)[: max(count, 0)]


def top_missing_pairs(n, ranking: CentralityRanking, count, forbidden):
    """Top ``count`` node pairs not in ``forbidden``, without scanning all O(n^2) pairs.

    Candidates are enumerated among the q' highest-score nodes and q' is grown
    until the selection is certified: every pair touching a node outside the
    top q' has key at most key(best node, next node), so once the count-th
    candidate key strictly exceeds that bound no outside pair can displace the
    selection. Score plateaus fall back to the exact full scan (q' = n).
    """
    if count <= 0:
        return []
    forbidden = set(forbidden)
    order = sorted(range(n), key=lambda v: (-ranking.scores[v], v))
    qp = min(n, max(8, int(np.ceil(np.sqrt(2 * (count + len(forbidden)))) + 1)))
    while True:
        nodes = order[:qp]
        cands = [
            normalize_pair(a, b)
            for ai, a in enumerate(nodes)
            for b in nodes[ai + 1 :]
            if normalize_pair(a, b) not in forbidden
        ]
        cands = _sorted_desc(cands, ranking)
        if qp >= n:
            return cands[:count]
        if len(cands) >= count:
            kth = ranking.key(cands[count - 1])
            bound = ranking.key((order[0], order[qp]))
            if kth > bound:
                return cands[:count]
        qp = min(n, 2 * qp)


# ---------------------------------------------------------------------
# Greedy search-space selection
# ---------------------------------------------------------------------


class Strategy(enum.Enum):
    """Search-space selection strategies for the greedy optimizers.

    DG_* shrink the existing edge set (edge removal); AD_* pick among missing
    pairs (edge addition). The numbered variants rank by centrality (1 =
    product ordering, 2 = minmax ordering); AD_3 restricts to pairs among the
    d highest-degree nodes, d being the maximum degree.
    """

    DG_FULL = "dg_full"
    DG_1 = "dg1"
    DG_2 = "dg2"
    AD_1 = "ad1"
    AD_2 = "ad2"
    AD_3 = "ad3"

    @property
    def is_removal(self):
        return self in (Strategy.DG_FULL, Strategy.DG_1, Strategy.DG_2)

    @property
    def implied_ordering(self):
        if self in (Strategy.DG_1, Strategy.AD_1):
            return Ordering.PRODUCT
        if self in (Strategy.DG_2, Strategy.AD_2):
            return Ordering.MINMAX
        return None


@dataclass(frozen=True)
class SearchSpaceState:
    """Greedy bookkeeping: strategy, search size q, picks so far, step index."""

    strategy: Strategy
    q: int
    chosen: frozenset = field(default_factory=frozenset)
    step: int = 0

    def __post_init__(self):
        if self.q < 1:
            raise ValidationError("search size q must be >= 1")
        object.__setattr__(
            self, "chosen", frozenset(normalize_pair(*p) for p in self.chosen)
        )


def select_search_space(g: SparseSymGraph, state: SearchSpaceState, ranking=None):
    """Candidate pairs for the next greedy step; empty list signals exhaustion.

    Ranked strategies (DG_1/DG_2/AD_1/AD_2) index the *initial* edge or
    non-edge sets, reconstructed here from the working graph plus the chosen
    set, and keep the ranking fixed across steps. The ordering is implied by
    the strategy; ``ranking`` supplies the node scores.
    """
    strat = state.strategy
    chosen = state.chosen
    budgeted = state.q + state.step

    if strat is Strategy.DG_FULL:
        return [p for p in g.edge_pairs if p not in chosen]

    if strat in (Strategy.DG_1, Strategy.DG_2):
        if ranking is None:
            raise ValueError(f"{strat} requires a centrality ranking")
        ranking = CentralityRanking(ranking.scores, strat.implied_ordering)
        initial_edges = set(g.edge_pairs) | chosen
        top = top_edges(initial_edges, ranking, budgeted)
        return [p for p in top if p not in chosen]

    if strat in (Strategy.AD_1, Strategy.AD_2):
        if ranking is None:
            raise ValueError(f"{strat} requires a centrality ranking")
        ranking = CentralityRanking(ranking.scores, strat.implied_ordering)
        initial_edges = set(g.edge_pairs) - chosen
        top = top_missing_pairs(g.n, ranking, budgeted, initial_edges)
        return [p for p in top if p not in chosen]

    if strat is Strategy.AD_3:
        deg = g.degrees()
        d = int(deg.max()) if g.num_edges else 0
        if d == 0:
            return []
        nodes = sorted(range(g.n), key=lambda v: (-deg[v], v))[:d]
        edge_set = set(g.edge_pairs)
        return [
            normalize_pair(a, b)
            for ai, a in enumerate(sorted(nodes))
            for b in sorted(nodes)[ai + 1 :]
            if normalize_pair(a, b) not in edge_set and normalize_pair(a, b) not in chosen
        ]

    raise ValueError(f"unknown strategy {strat}")
