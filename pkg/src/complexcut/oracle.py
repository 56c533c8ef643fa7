"""Exact ground truth for small instances.

Vertices of the complex cut polytope are the rank-one matrices ``x x*`` with
``x`` in ``B_m^n``.  Because ``x x*`` is invariant under a global phase, we
enumerate only the representatives with ``x_1 = 1`` (``m^(n-1)`` points).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .conic import ConeSpec, ConicProblem, Settings, Status, solve
from .linalg import hermitian, inner, is_infinite, rank_one

MAX_VERTICES = 10**7
CHUNK = 1 << 16


class BudgetExceeded(ValueError):
    """Enumeration would exceed the vertex budget."""


def _check_budget(n: int, m) -> int:
    if is_infinite(m):
        raise BudgetExceeded("cannot enumerate vertices for infinite m")
    count = int(m) ** (n - 1)
    if count > MAX_VERTICES:
        raise BudgetExceeded(f"m^(n-1) = {count} exceeds budget {MAX_VERTICES}")
    return count


def exponent_grid(n: int, m: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Exponents ``k`` (rows) with ``x_i = exp(2 pi i k_i / m)`` and ``k_1 = 0``."""
    count = int(m) ** (n - 1)
    stop = count if stop is None else min(stop, count)
    idx = np.arange(start, stop, dtype=np.int64)
    powers = int(m) ** np.arange(n - 2, -1, -1, dtype=np.int64)
    digits = (idx[:, None] // powers[None, :]) % m
    return np.concatenate([np.zeros((idx.size, 1), dtype=np.int64), digits], axis=1)


def phases(k: np.ndarray, m: int) -> np.ndarray:
    return np.exp(2j * np.pi * (np.asarray(k) % m) / m)


@dataclass(frozen=True, eq=False)
class VertexList:
    n: int
    m: int
    exponents: np.ndarray

    @property
    def representatives(self) -> np.ndarray:
        return phases(self.exponents, self.m)

    @property
    def vertices(self) -> np.ndarray:
        x = self.representatives
        return x[:, :, None] * x[:, None, :].conj()

    def __len__(self) -> int:
        return self.exponents.shape[0]


def enumerate_vertices(n: int, m: int) -> VertexList:
    _check_budget(n, m)
    return VertexList(n=n, m=int(m), exponents=exponent_grid(n, m))


def _quadratic_values(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("ki,ij,kj->k", x.conj(), q, x).real


def brute_max(q, m) -> tuple[float, np.ndarray]:
    """Exact ``max x* Q x`` over ``x`` in ``B_m^n`` (first maximizer returned)."""
    q = hermitian(q)
    n = q.shape[0]
    count = _check_budget(n, m)
    best, arg = -np.inf, None
    for start in range(0, count, CHUNK):
        x = phases(exponent_grid(n, m, start, start + CHUNK), m)
        vals = _quadratic_values(q, x)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, arg = float(vals[i]), x[i]
    return best, arg


def brute_min(q, m) -> tuple[float, np.ndarray]:
    val, arg = brute_max(-hermitian(q), m)
    return -val, arg


def upper_params(x: np.ndarray) -> np.ndarray:
    """Real coordinates (Re, Im of the strict upper triangle) of a matrix or stack."""
    x = np.asarray(x)
    n = x.shape[-1]
    iu = np.triu_indices(n, 1)
    up = x[..., iu[0], iu[1]]
    return np.concatenate([up.real, up.imag], axis=-1)


@dataclass
class Membership:
    inside: bool
    weights: np.ndarray | None
    certificate: np.ndarray | None
    status: Status


def cut_membership(x, m, settings: Settings | None = None) -> Membership:
    """Decide ``X in CUT_m^n`` by an LP over the convex hull of the vertices."""
    x = hermitian(x)
    n = x.shape[0]
    if np.max(np.abs(np.diag(x) - 1.0)) > 1e-8:
        raise ValueError("membership requires a unit diagonal")
    verts = enumerate_vertices(n, m).vertices
    k = verts.shape[0]
    A = np.vstack([upper_params(verts).T, np.ones((1, k))])
    b = np.concatenate([upper_params(x), [1.0]])
    prob = ConicProblem.standard_form(np.zeros(k), A, b, ConeSpec(nonneg=k))
    sol = solve(prob, settings)
    if sol.status == Status.OPTIMAL:
        return Membership(True, np.clip(sol.x, 0.0, None), None, sol.status)
    if sol.status == Status.PRIMAL_INFEASIBLE:
        return Membership(False, None, sol.y, sol.status)
    raise RuntimeError(f"membership LP ended with status {sol.status.value}")


@dataclass
class FacetAudit:
    name: str
    valid: bool
    tight_vertex_count: int
    affine_rank: int
    affinely_independent: bool
    max_violation: float

    @property
    def facet_defining(self) -> bool:
        return self.valid and self.affinely_independent


def polytope_dimension(n: int, m) -> int:
    pairs = n * (n - 1) // 2
    return pairs if int(m) == 2 else 2 * pairs


def verify_facet(cut, n: int, m, tol: float = 1e-9) -> FacetAudit:
    """Check validity of ``<Q, X> <= rhs`` and whether it defines a facet.

    The tight vertices must span an affine subspace of dimension
    ``dim(CUT) - 1``; equivalently the augmented matrix ``[v, 1]`` has rank
    ``dim(CUT)``.
    """
    vl = enumerate_vertices(n, m)
    x = vl.representatives
    vals = _quadratic_values(hermitian(cut.Q), x)
    max_violation = float(np.max(vals) - cut.rhs)
    tight = np.abs(vals - cut.rhs) <= tol
    pts = upper_params(vl.vertices[tight])
    if int(m) == 2:
        pts = pts[:, : pts.shape[1] // 2]
    aug = np.hstack([pts, np.ones((pts.shape[0], 1))])
    rank = int(np.linalg.matrix_rank(aug, tol=1e-9)) if pts.shape[0] else 0
    dim = polytope_dimension(n, m)
    return FacetAudit(name=cut.name, valid=max_violation <= tol,
                      tight_vertex_count=int(np.sum(tight)), affine_rank=rank,
                      affinely_independent=rank >= dim, max_violation=max_violation)


def max3cut_objective(edges, n: int | None = None, weights=None) -> tuple[np.ndarray, float]:
    """Return ``(C, offset)`` with ``x* C x + offset`` equal to the 3-cut weight.

    For ``x`` in ``B_3^n`` an edge is cut iff its endpoints differ, and
    ``(2/3) Re(1 - conj(x_i) x_j)`` is then 1 (else 0).
    """
    edges = [tuple(e) for e in edges]
    if any(i == j for i, j in edges) or len(set(map(frozenset, edges))) != len(edges):
        raise ValueError("max3cut_objective expects a simple graph")
    n = n if n is not None else 1 + max(max(e) for e in edges)
    weights = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=float)
    c = np.zeros((n, n), dtype=complex)
    for (i, j), w in zip(edges, weights):
        c[i, j] -= w / 3.0
        c[j, i] -= w / 3.0
    return c, float(2.0 * np.sum(weights) / 3.0)


def max3cut_bruteforce(edges, n: int, weights=None) -> float:
    """Direct enumeration of colorings in {0,1,2}^n."""
    weights = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=float)
    best = 0.0
    for colors in itertools.product(range(3), repeat=n):
        best = max(best, sum(w for (i, j), w in zip(edges, weights) if colors[i] != colors[j]))
    return float(best)


def random_cut_point(n: int, m: int, rng, terms: int | None = None) -> np.ndarray:
    """Random convex combination of vertices of ``CUT_m^n``."""
    verts = enumerate_vertices(n, m).vertices
    terms = terms or verts.shape[0]
    pick = rng.choice(verts.shape[0], size=min(terms, verts.shape[0]), replace=False)
    w = rng.dirichlet(np.ones(pick.size))
    return hermitian(np.tensordot(w, verts[pick], axes=1))


def cut_value(q, x) -> float:
    return inner(hermitian(q), rank_one(x))

