"""Communication graphs, structure matrices and their spectra.

Graphs are stored as dense boolean adjacency matrices; the agent counts used
here are at most a few hundred, so dense linear algebra is the simple choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

GRAPH_KINDS = ("complete", "cycle", "k_regular", "path", "custom")

STOCHASTIC_TOL = 1e-10


class TopologyError(ValueError):
    """Raised for invalid graph descriptions or structure matrices."""


@dataclass(frozen=True)
class Adjacency:
    n: int
    edges: np.ndarray = field(repr=False)
    self_loops: bool = True
    kind: str = "custom"

    def degrees(self) -> np.ndarray:
        """Neighbour counts, self-loops excluded."""
        off = self.edges.copy()
        np.fill_diagonal(off, False)
        return off.sum(axis=1)

    def is_connected(self) -> bool:
        n_comp, _ = connected_components(self.edges.astype(np.int8), directed=False)
        return n_comp == 1


@dataclass(frozen=True)
class Topology:
    adjacency: Adjacency
    W: np.ndarray = field(repr=False)
    lambda2: float
    spectral_gap: float
    label: str = ""

    @property
    def n(self) -> int:
        return self.W.shape[0]


def _ring_lattice(n: int, k: int) -> np.ndarray:
    edges = np.zeros((n, n), dtype=bool)
    idx = np.arange(n)
    for offset in range(1, k // 2 + 1):
        edges[idx, (idx + offset) % n] = True
        edges[idx, (idx - offset) % n] = True
    return edges


def build_graph(
    kind: str,
    n: int,
    self_loops: bool = True,
    k: int | None = None,
    edges: list[tuple[int, int]] | None = None,
) -> Adjacency:
    """Build a connected undirected graph on ``n`` nodes.

    ``k_regular`` graphs are circulant ring lattices where every node is linked
    to its ``k/2`` nearest neighbours on each side; ``cycle`` is the ``k=2``
    case. ``custom`` takes an explicit 0-indexed edge list.
    """
    if n < 1:
        raise TopologyError(f"agent count must be >= 1, got {n}")
    if kind == "complete":
        adj = np.ones((n, n), dtype=bool)
    elif kind == "path":
        adj = np.zeros((n, n), dtype=bool)
        i = np.arange(n - 1)
        adj[i, i + 1] = True
        adj[i + 1, i] = True
    elif kind in ("cycle", "k_regular"):
        if kind == "cycle":
            k = 2
        if k is None:
            raise TopologyError("k_regular graph needs a degree k")
        if k % 2 or k <= 0:
            raise TopologyError(f"k_regular needs a positive even k, got {k}")
        if k >= n:
            raise TopologyError(f"k_regular needs k < n, got k={k}, n={n}")
        adj = _ring_lattice(n, k)
    elif kind == "custom":
        adj = np.zeros((n, n), dtype=bool)
        for i, j in edges or []:
            if not (0 <= i < n and 0 <= j < n):
                raise TopologyError(f"edge ({i}, {j}) out of range for n={n}")
            adj[i, j] = adj[j, i] = True
    else:
        raise TopologyError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")

    np.fill_diagonal(adj, self_loops)
    label = f"{k}-regular" if kind == "k_regular" else kind
    result = Adjacency(n=n, edges=adj, self_loops=self_loops, kind=label)
    if not result.is_connected():
        raise TopologyError("graph not connected")
    return result


def load_edge_list(path: str | Path) -> tuple[int, list[tuple[int, int]]]:
    """Read ``n`` on the first line followed by one ``i j`` pair per line."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise TopologyError(f"{path}: empty edge list")
    n = int(lines[0])
    edges = []
    for ln in lines[1:]:
        i, j = ln.split()
        edges.append((int(i), int(j)))
    return n, edges


def symmetric_eig(A: np.ndarray, vectors: bool = False, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a real symmetric matrix.

    Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm
    drops below ``tol`` (scaled by the matrix norm when that exceeds one).
    Returns the eigenvalues in ascending order, plus the eigenvectors as
    columns when ``vectors`` is set.
    """
    A = np.array(A, dtype=float, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    Q = np.eye(n) if vectors else None
    threshold = tol * max(1.0, np.linalg.norm(A))

    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) < 1e-36 * abs(diff):
                    t = apq / diff  # theta^2 would overflow
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.hypot(theta, 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q]
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :]
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                if Q is not None:
                    qp = Q[:, p].copy()
                    Q[:, p] = c * qp - s * Q[:, q]
                    Q[:, q] = s * qp + c * Q[:, q]
    else:
        raise RuntimeError("Jacobi eigensolver did not converge")

    evals = np.diag(A).copy()
    order = np.argsort(evals)
    if vectors:
        return evals[order], Q[:, order]
    return evals[order]


def second_eigenvalue(W: np.ndarray) -> float:
    """Largest eigenvalue magnitude once one copy of the eigenvalue 1 is removed."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise TopologyError("structure matrix must be square")
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-12):
        raise TopologyError("structure matrix must be symmetric")
    if W.shape[0] == 1:
        return 0.0
    evals = symmetric_eig(W)
    rest = np.delete(evals, np.argmin(np.abs(evals - 1.0)))
    return float(np.max(np.abs(rest)))


def check_structure_matrix(W: np.ndarray, adjacency: Adjacency | None = None) -> None:
    """Raise TopologyError unless W is symmetric, nonnegative and doubly stochastic."""
    if not np.array_equal(W, W.T):
        raise TopologyError("structure matrix is not symmetric")
    if np.any(W < 0):
        raise TopologyError("structure matrix has negative entries")
    if np.max(np.abs(W.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
        raise TopologyError("structure matrix rows do not sum to 1")
    if np.max(np.abs(W.sum(axis=0) - 1.0)) > STOCHASTIC_TOL:
        raise TopologyError("structure matrix columns do not sum to 1")
    if adjacency is not None:
        off_edge = ~adjacency.edges
        np.fill_diagonal(off_edge, False)
        if np.any(W[off_edge] != 0):
            raise TopologyError("structure matrix puts weight on a non-edge")


def structure_matrix(adj: Adjacency) -> Topology:
    """Max-degree weights: 1/(k_max+1) per edge, remaining mass on the diagonal.

    On a k-regular graph this is uniform averaging over the closed
    neighbourhood, W_ij = 1/(k+1); on the complete graph it is J/N.
    """
    if not adj.is_connected():
        raise TopologyError("graph not connected")
    off = adj.edges.astype(float)
    np.fill_diagonal(off, 0.0)
    deg = off.sum(axis=1)
    k_max = deg.max() if adj.n > 1 else 0.0
    W = off / (k_max + 1.0)
    W[np.diag_indices(adj.n)] = (k_max + 1.0 - deg) / (k_max + 1.0)
    check_structure_matrix(W, adj)
    lam2 = second_eigenvalue(W)
    if lam2 >= 1.0:
        raise TopologyError("disconnected or periodic structure matrix")
    return Topology(adjacency=adj, W=W, lambda2=lam2, spectral_gap=1.0 - lam2, label=adj.kind)


def topology_from_matrix(W: np.ndarray, label: str = "weighted") -> Topology:
    """Wrap an explicit structure matrix; the graph is read off its support."""
    W = np.array(W, dtype=float)
    edges = W != 0
    np.fill_diagonal(edges, True)
    adj = Adjacency(n=W.shape[0], edges=edges, self_loops=True, kind=label)
    if not adj.is_connected():
        raise TopologyError("graph not connected")
    check_structure_matrix(W)
    lam2 = second_eigenvalue(W)
    if lam2 >= 1.0:
        raise TopologyError("disconnected or periodic structure matrix")
    return Topology(adjacency=adj, W=W, lambda2=lam2, spectral_gap=1.0 - lam2, label=label)


def make_topology(kind: str, n: int, self_loops: bool = True, k: int | None = None,
                  edge_file: str | Path | None = None) -> Topology:
    """Convenience wrapper: build the graph and its structure matrix in one call."""
    edges = None
    if kind == "custom":
        if edge_file is None:
            raise TopologyError("custom topology needs an edge-list file")
        n_file, edges = load_edge_list(edge_file)
        if n_file != n:
            raise TopologyError(f"{edge_file}: edge list has n={n_file}, config says n={n}")
    return structure_matrix(build_graph(kind, n, self_loops=self_loops, k=k, edges=edges))
