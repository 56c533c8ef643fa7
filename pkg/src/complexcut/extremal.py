"""Rank-2 extreme points of complex elliptopes.

A rank-2 correlation matrix ``A`` factors as ``A = G* G`` with ``G`` of shape
``2 x k`` and unit columns.  Perturbations of ``A`` inside the elliptope are
``B = G* R G`` with ``R`` Hermitian and ``diag(B) = 0``; ``A`` is extreme
exactly when no nonzero perturbation survives the polygon constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import hermitian, numeric_rank, psd_factor, roots_of_unity
from .relax import in_polygon, polygon_halfspaces

EGF_TOL = 1e-9
BOUNDARY_TOL = 1e-9
NULL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GramFactor:
    G: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.G, dtype=complex)
        if g.ndim != 2 or g.shape[0] != 2:
            raise ValueError("a Gram factor has two rows")
        if np.max(np.abs(np.linalg.norm(g, axis=0) - 1.0)) > 1e-10:
            raise ValueError("Gram factor columns must have unit norm")
        object.__setattr__(self, "G", g)

    @property
    def canonical(self) -> bool:
        g = self.G
        return (abs(g[0, 0] - 1.0) <= 1e-10 and abs(g[1, 0]) <= 1e-10
                and bool(np.all(np.abs(g[1, 1:]) > 1e-10)))

    def gram(self) -> np.ndarray:
        return hermitian(self.G.conj().T @ self.G, tol=1e-9)


def canonical_gram(a) -> GramFactor:
    """Factor a rank-2 unit-diagonal ``A`` as ``G* G`` with first column ``(1, 0)``."""
    a = hermitian(a, tol=1e-9)
    if numeric_rank(a, 1e-8) != 2:
        raise ValueError("canonical_gram needs a rank-2 matrix")
    if np.max(np.abs(np.diag(a) - 1.0)) > 1e-8:
        raise ValueError("canonical_gram needs a unit diagonal")
    v = psd_factor(a, tol=1e-8)
    v = v / np.linalg.norm(v, axis=0)
    z = v[:, 0]
    q = np.array([[np.conj(z[0]), np.conj(z[1])], [-z[1], z[0]]])
    g = q @ v
    g[:, 0] = [1.0, 0.0]
    return GramFactor(g)


def f_matrix(g) -> np.ndarray:
    """Rows ``(|g1|^2, g1 conj(g2), conj(g1) g2, |g2|^2)`` per column of ``G``."""
    g = np.asarray(g, dtype=complex)
    g1, g2 = g[0], g[1]
    return np.stack([np.abs(g1) ** 2, g1 * g2.conj(), g1.conj() * g2, np.abs(g2) ** 2], axis=1)


def is_egf(gf: GramFactor, tol: float = EGF_TOL) -> tuple[bool, complex]:
    if gf.G.shape != (2, 4):
        raise ValueError("EGF test is defined for 2 x 4 factors")
    det = complex(np.linalg.det(f_matrix(gf.G)))
    return abs(det) > tol, det


def random_gram_factor(k: int, rng: np.random.Generator) -> GramFactor:
    g = rng.standard_normal((2, k)) + 1j * rng.standard_normal((2, k))
    g /= np.linalg.norm(g, axis=0)
    # Rotate so the first column is e_1.
    z = g[:, 0]
    q = np.array([[np.conj(z[0]), np.conj(z[1])], [-z[1], z[0]]])
    g = q @ g
    g[:, 0] = [1.0, 0.0]
    return GramFactor(g)


def random_rank2_extreme_E4inf(rng: np.random.Generator, retries: int = 100) -> np.ndarray:
    """Draw ``G* G`` for a random extremal Gram factor (rank-2 extreme point of E^4_inf)."""
    for _ in range(retries):
        gf = random_gram_factor(4, rng)
        if gf.canonical and is_egf(gf)[0]:
            return gf.gram()
    raise RuntimeError("could not draw a nondegenerate Gram factor")


def e3m_rank2_extreme(m: int) -> np.ndarray:
    """Explicit rank-2 extreme point of E^3_m for finite ``m >= 3``."""
    if not isinstance(m, (int, np.integer)) or m < 3:
        raise ValueError("m must be a finite integer >= 3")
    s = math.sin(math.pi / m)
    h = 0.5 + 0.5 * np.exp(2j * math.pi / m)
    g = np.array([[1.0, h, s], [0.0, s, h]], dtype=complex)
    return hermitian(g.conj().T @ g, tol=1e-12)


def in_elliptope(n_mat, m, tol: float = 1e-8) -> bool:
    a = hermitian(n_mat, tol=1e-9)
    if np.max(np.abs(np.diag(a) - 1.0)) > tol:
        return False
    if np.linalg.eigvalsh(a)[0] < -tol:
        return False
    iu = np.triu_indices(a.shape[0], 1)
    return all(in_polygon(x, m, tol) for x in a[iu])


@dataclass
class ExtremalityReport:
    extreme: bool
    reason: str
    boundary: dict = field(default_factory=dict)
    null_dim: int = 0
    perturbation: np.ndarray | None = None
    singular_values: np.ndarray | None = None


def classify_entry(x: complex, m: int, tol: float = BOUNDARY_TOL):
    """Return ``("root", k)``, ``("edge", k)`` or ``("interior", None)``.

    ``k`` indexes the root or the facet normal ``nu_k`` (1-based).
    """
    roots = roots_of_unity(m)
    d = np.abs(roots - x)
    if np.min(d) <= tol:
        return "root", int(np.argmin(d)) + 1
    rhs = math.cos(math.pi / m)
    for k, h in enumerate(polygon_halfspaces(m), start=1):
        if abs((np.conj(h.nu) * x).real - rhs) <= tol:
            return "edge", k
    return "interior", None


def _perturbation(g: np.ndarray, params: np.ndarray) -> np.ndarray:
    alpha = params[0] + 1j * params[1]
    r = np.array([[0.0, np.conj(alpha)], [alpha, params[2]]])
    return g.conj().T @ r @ g


def perturbation_system(gf: GramFactor, boundary: dict, m: int) -> np.ndarray:
    """Real matrix acting on ``(Re alpha, Im alpha, c)`` for ``R = [[0, conj a], [a, c]]``.

    Rows: ``diag(G* R G) = 0`` for columns 2..k, then ``Re(conj(nu) b_ij) = 0``
    for every boundary pair.
    """
    g = gf.G
    nus = [h.nu for h in polygon_halfspaces(m)]

    def rows(params):
        b = _perturbation(g, params)
        out = list(np.diag(b).real[1:])
        for (i, j), k in sorted(boundary.items()):
            out.append((np.conj(nus[k - 1]) * b[i, j]).real)
        return np.array(out)

    return np.stack([rows(e) for e in np.eye(3)], axis=1)


def is_extreme_rank2_e3m(n_mat, m: int, tol: float = NULL_TOL) -> ExtremalityReport:
    """Decide whether a rank-2 ``N`` is an extreme point of E^3_m."""
    n_mat = hermitian(n_mat, tol=1e-9)
    if n_mat.shape != (3, 3):
        raise ValueError("expected a 3 x 3 matrix")
    if numeric_rank(n_mat, 1e-8) != 2:
        raise ValueError("matrix must have rank 2")
    if not in_elliptope(n_mat, m):
        raise ValueError("matrix is not in E^3_m")
    boundary = {}
    for i, j in ((0, 1), (0, 2), (1, 2)):
        kind, k = classify_entry(n_mat[i, j], m)
        if kind == "root":
            return ExtremalityReport(False, f"entry ({i + 1},{j + 1}) is a root of unity")
        if kind == "edge":
            boundary[(i, j)] = k
    if not boundary:
        return ExtremalityReport(False, "all off-diagonal entries are interior")
    gf = canonical_gram(n_mat)
    system = perturbation_system(gf, boundary, m)
    _, sv, vt = np.linalg.svd(system)
    smax = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > tol * max(smax, 1e-300)))
    null_dim = 3 - rank
    if null_dim == 0:
        return ExtremalityReport(True, "no perturbation keeps the boundary entries on their edges",
                                 boundary, 0, None, sv)
    pert = _perturbation(gf.G, vt[-1])
    return ExtremalityReport(False, "a boundary-preserving perturbation exists", boundary,
                             null_dim, pert, sv)
