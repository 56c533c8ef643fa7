"""Valid inequalities ``<Q, X> <= rhs`` for the complex cut polytope.

The catalog covers the facets of the 3-node polytope for m = 3, clique
inequalities ``<I - J, X> <= rhs`` and their phase rotations, gap
inequalities built from a complex vector, and a 4-node inequality that
survives the first moment lifting.  :func:`strength` compares the
elliptope optimum of an objective with its exact combinatorial optimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .linalg import group_rotate, hermitian, inner, is_infinite, roots_of_unity
from .oracle import brute_max, brute_min

SQRT3 = math.sqrt(3.0)

FAMILIES = ("triangle-facet", "polygon", "real-facet", "clique", "gap", "h")

# Coefficients eta of Re(eta_1 x_1 + eta_2 x_2 + eta_3 x_3) <= sqrt(3)/2 on the
# entries x = (X_12, X_13, X_23); angles in units of pi/6.
_TRIANGLE_ANGLES = [
    (3, 1, 3), (5, -1, 1), (1, -1, 5), (3, -3, -1), (1, -5, 1), (-1, -3, 3),
    (-5, 1, -1), (-3, 3, 1), (1, 3, -3), (-1, 1, -5), (-1, 5, -1), (-3, -1, -3),
    (5, 3, 5), (-5, 5, 3), (3, 5, -5), (5, -5, -3), (-5, -3, -5), (-3, -5, 5),
]
# Single-entry facets: (position, angle in units of pi/6) of sqrt(3) e^{i angle}.
_POLYGON_TERMS = [(0, 2), (0, -2), (0, 6), (1, -2), (1, 2), (1, 6), (2, 2), (2, -2), (2, 6)]


@dataclass(frozen=True, eq=False)
class CutDescriptor:
    Q: np.ndarray
    rhs: float
    name: str
    family: str
    origin: str = ""

    def __post_init__(self):
        object.__setattr__(self, "Q", hermitian(self.Q))
        object.__setattr__(self, "rhs", float(self.rhs))

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def value(self, x) -> float:
        return inner(self.Q, x)

    def violation(self, x) -> float:
        return self.value(x) - self.rhs


def eta_matrix(eta) -> np.ndarray:
    """Hermitian Q on three nodes with ``<Q, X> = Re(sum eta_k x_k)``."""
    q = np.zeros((3, 3), dtype=complex)
    for (i, j), e in zip(((0, 1), (0, 2), (1, 2)), eta):
        q[i, j] = np.conj(e) / 2.0
        q[j, i] = e / 2.0
    return q


def _eta_cut(eta, rhs, name, family, origin=""):
    return CutDescriptor(eta_matrix(eta), rhs, name, family, origin)


def triangle_facets_cut33() -> list[CutDescriptor]:
    """The 18 facets of CUT_3^3 that involve all three entries."""
    out = []
    for k, angles in enumerate(_TRIANGLE_ANGLES, start=1):
        eta = [np.exp(1j * np.pi * a / 6.0) for a in angles]
        out.append(_eta_cut(eta, SQRT3 / 2.0, f"facet-{k}", "triangle-facet"))
    return out


def polygon_facets_cut33() -> list[CutDescriptor]:
    out = []
    for k, (pos, angle) in enumerate(_POLYGON_TERMS, start=19):
        eta = [0.0, 0.0, 0.0]
        eta[pos] = SQRT3 * np.exp(1j * np.pi * angle / 6.0)
        out.append(_eta_cut(eta, SQRT3 / 2.0, f"facet-{k}", "polygon"))
    return out


def facet_catalog_cut33() -> list[CutDescriptor]:
    """All 27 facets of CUT_3^3 in catalog order."""
    return triangle_facets_cut33() + polygon_facets_cut33()


def facet_eta(cut: CutDescriptor) -> np.ndarray:
    q = cut.Q
    return 2.0 * np.conj(np.array([q[0, 1], q[0, 2], q[1, 2]]))


def real_facets_cut33() -> list[CutDescriptor]:
    """Six halfspaces describing the real parts of CUT_3^3 entries."""
    rows = [((-1, 0, 0), 0.5, "x1>=-1/2"), ((0, -1, 0), 0.5, "x2>=-1/2"),
            ((0, 0, -1), 0.5, "x3>=-1/2"), ((1, 1, -1), 1.0, "x1+x2-x3<=1"),
            ((1, -1, 1), 1.0, "x1-x2+x3<=1"), ((-1, 1, 1), 1.0, "-x1+x2+x3<=1")]
    return [_eta_cut(np.array(c, dtype=float), rhs, name, "real-facet") for c, rhs, name in rows]


def clique_rhs(n: int, m) -> float:
    """Closed-form ``max <I - J, X>`` over CUT_m^n for n in {3, 4}."""
    if n not in (3, 4):
        raise ValueError("closed form is available for n in {3, 4}")
    if is_infinite(m):
        return float(n)
    m = int(m)
    if n == 3 and m % 3 != 0:
        k = math.floor(m / 3 + 0.5)
        return -4 * math.cos(2 * k * math.pi / m) - 2 * math.cos(4 * k * math.pi / m)
    if n == 4 and m % 2 == 1:
        k = m // 2
        return -2 - 8 * math.cos(2 * k * math.pi / m) - 2 * math.cos(4 * k * math.pi / m)
    return float(n)


def clique_cut(n: int, m) -> CutDescriptor:
    q = np.eye(n) - np.ones((n, n))
    return CutDescriptor(q, clique_rhs(n, m), f"clique-{n}", "clique", f"m={m}")


def h_matrix() -> np.ndarray:
    return np.array([[0, -1j, 1j, 1], [1j, 0, -1j, 1], [-1j, 1j, 0, 1], [1, 1, 1, 0]])


def h_cut() -> CutDescriptor:
    return CutDescriptor(h_matrix(), 6.0, "h", "h")


def phase_grid(n: int, m: int) -> np.ndarray:
    """All ``alpha`` in ``B_m^n`` with ``alpha_1 = 1``."""
    roots = roots_of_unity(m)
    rows = [np.concatenate([[1.0], roots[list(t)]]) for t in
            itertools.product(range(m), repeat=n - 1)]
    return np.array(rows, dtype=complex)


def rotate_cut(cut: CutDescriptor, alpha, tag: str | None = None) -> CutDescriptor:
    q = group_rotate(cut.Q, alpha)
    return CutDescriptor(q, cut.rhs, tag or f"{cut.name}@rot", cut.family,
                         f"rotation of {cut.name}")


def conjugate_cut(cut: CutDescriptor) -> CutDescriptor:
    return CutDescriptor(cut.Q.conj(), cut.rhs, f"{cut.name}*", cut.family,
                         f"conjugate of {cut.name}")


def dedupe(cuts: list[CutDescriptor], tol: float = 1e-12) -> list[CutDescriptor]:
    out: list[CutDescriptor] = []
    for c in cuts:
        if not any(abs(c.rhs - d.rhs) <= tol and np.max(np.abs(c.Q - d.Q)) <= tol for d in out):
            out.append(c)
    return out


def roc_orbit(cut: CutDescriptor, m: int) -> list[CutDescriptor]:
    """Distinct rotations ``(alpha alpha*) o Q`` over ``alpha`` in ``B_m^n``."""
    if is_infinite(m):
        raise ValueError("orbits are finite only for finite m")
    rotated = [rotate_cut(cut, a, f"{cut.name}@{k}") for k, a in enumerate(phase_grid(cut.n, m))]
    return dedupe(rotated)


def roc_triangle(alpha1: complex, alpha2: complex, m) -> CutDescriptor:
    """``-2 Re(a1 X12 + a2 X13 + conj(a1) a2 X23) <= rhs``."""
    return rotate_cut(clique_cut(3, m), [1.0, alpha1, alpha2], "roc-triangle")


def roc_quadrangle(alpha1: complex, alpha2: complex, alpha3: complex, m) -> CutDescriptor:
    return rotate_cut(clique_cut(4, m), [1.0, alpha1, alpha2, alpha3], "roc-quadrangle")


def triangle_templates(m: int) -> list[CutDescriptor]:
    """Three-node cuts added to every 3-subset by the strengthened relaxation."""
    if m == 3:
        return triangle_facets_cut33()
    if m == 4:
        return roc_orbit(clique_cut(3, 4), 4)
    raise ValueError("triangle strengthening is defined for m in {3, 4}")


@dataclass(frozen=True, eq=False)
class GapCutData:
    b: np.ndarray
    sigma: complex
    gamma: float
    B: np.ndarray
    min_value: float


def gap_cut(b, m) -> tuple[GapCutData, CutDescriptor]:
    """Gap inequality ``<-B, X> <= -min`` with ``B = b b* - Diag(|b_i|^2)``.

    ``gamma = min |b* x|`` is enumerated; the minimum of ``<B, X>`` then has the
    closed form ``2 Re(sum_{i<j} b_i conj(b_j)) + gamma^2 - |sigma|^2``.
    """
    b = np.asarray(b, dtype=complex).ravel()
    n = b.size
    B = np.outer(b, b.conj())
    B[np.diag_indices(n)] = 0.0
    B = hermitian(B)
    val, _ = brute_min(np.outer(b, b.conj()), m)
    gamma = math.sqrt(max(val, 0.0))
    sigma = complex(np.sum(b))
    iu = np.triu_indices(n, 1)
    cross = 2.0 * float(np.sum(b[iu[0]] * b[iu[1]].conj()).real)
    min_value = cross + gamma**2 - abs(sigma) ** 2
    data = GapCutData(b=b, sigma=sigma, gamma=gamma, B=B, min_value=min_value)
    return data, CutDescriptor(-B, -min_value, "gap", "gap", f"m={m}")


@dataclass(frozen=True)
class Strength:
    numerator: float
    denominator: float

    @property
    def value(self) -> float:
        return self.numerator / self.denominator


def strength(q, m, settings=None) -> Strength:
    """Ratio of the elliptope optimum to the exact optimum over CUT_m^n."""
    from .relax import FeasibleSet, Kind, solve_relaxation

    q = hermitian(q)
    den, _ = brute_max(q, m)
    if den <= 1e-9:
        raise ValueError(
            f"combinatorial optimum {den:.3e} is not positive; add a nonnegative "
            "diagonal shift to Q before computing the strength")
    res = solve_relaxation(q, FeasibleSet(Kind.ELLIPTOPE, q.shape[0], m), settings)
    return Strength(numerator=res.value, denominator=den)


@dataclass(frozen=True, eq=False)
class Violation:
    cut: CutDescriptor
    support: tuple[int, ...]
    amount: float


def _family_templates(family: str, m) -> list[CutDescriptor]:
    finite = not is_infinite(m)
    if family == "triangle-facet":
        return triangle_facets_cut33() if finite and int(m) == 3 else []
    if family == "polygon":
        return polygon_facets_cut33() if finite and int(m) == 3 else []
    if family == "real-facet":
        return real_facets_cut33() if finite and int(m) == 3 else []
    if family == "clique":
        out = []
        for k in (3, 4):
            base = clique_cut(k, m)
            out.extend(roc_orbit(base, int(m)) if finite else [base])
        return out
    if family == "h":
        base = h_cut()
        cuts = roc_orbit(base, int(m)) if finite else [base]
        return dedupe(cuts + [conjugate_cut(c) for c in cuts])
    raise ValueError(f"unknown or unsupported family {family!r}")


def separate(x, families, m, tol: float = 1e-7) -> list[Violation]:
    """Violated cuts of the given families over all 3- and 4-node supports."""
    x = hermitian(x)
    n = x.shape[0]
    if np.max(np.abs(np.diag(x) - 1.0)) > 1e-6:
        raise ValueError("separation expects a unit diagonal")
    found = []
    for family in families:
        for cut in _family_templates(family, m):
            for support in itertools.combinations(range(n), cut.n):
                sub = x[np.ix_(support, support)]
                amount = cut.violation(sub)
                if amount > tol:
                    found.append(Violation(cut, support, amount))
    found.sort(key=lambda v: -v.amount)
    return found
