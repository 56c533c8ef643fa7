"""Conic models of the complex elliptope and its strengthenings.

A Hermitian ``X`` of order n with unit diagonal is parametrized by its
diagonal ``d`` (fixed to 1 by equality rows), and the real and imaginary
parts ``r, t`` of its strict upper triangle.  The PSD condition is imposed on
the real embedding ``[[Re X, Im X], [-Im X, Re X]]``; polygon and triangle
inequalities are linear rows in ``(d, r, t)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .conic import ConeSpec, ConicProblem, Settings, Solution, Status, svec_dim, svec_index, SQRT2, solve
from .cuts import real_facets_cut33, triangle_templates
from .linalg import INF, hermitian, inner, is_infinite

FEAS_TOL = 1e-7


class Kind(str, Enum):
    ELLIPTOPE = "elliptope"
    TRIANGLE = "triangle"
    REAL_ELLIPTOPE3 = "real-elliptope"
    REAL_TRIANGLE3 = "real-triangle"
    ELLIPTOPE_INF = "elliptope-inf"


@dataclass(frozen=True)
class FeasibleSet:
    kind: Kind
    n: int
    m: float = INF

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if kind == Kind.ELLIPTOPE_INF:
            object.__setattr__(self, "m", INF)
        elif is_infinite(self.m):
            if kind != Kind.ELLIPTOPE:
                raise ValueError(f"{kind.value} needs a finite m")
        else:
            if int(self.m) != self.m or self.m < 2:
                raise ValueError(f"m must be an integer >= 2, got {self.m!r}")
            object.__setattr__(self, "m", int(self.m))
        if kind == Kind.TRIANGLE and self.m not in (3, 4):
            raise ValueError("triangle strengthening requires m in {3, 4}")
        if kind in (Kind.REAL_ELLIPTOPE3, Kind.REAL_TRIANGLE3) and self.m != 3:
            raise ValueError("real reformulations are defined for m = 3")

    @property
    def is_real(self) -> bool:
        return self.kind in (Kind.REAL_ELLIPTOPE3, Kind.REAL_TRIANGLE3)


@dataclass(frozen=True)
class Halfspace:
    nu: complex
    rhs: float


def polygon_halfspaces(m: int) -> list[Halfspace]:
    """Halfspaces ``Re(conj(nu_k) x) <= cos(pi/m)`` with ``nu_k = e^{(2k-1) pi i/m}``."""
    if is_infinite(m) or m < 2:
        raise ValueError("polygon halfspaces need a finite m >= 2")
    rhs = math.cos(math.pi / m)
    return [Halfspace(complex(np.exp(1j * (2 * k - 1) * math.pi / m)), rhs)
            for k in range(1, m + 1)]


def in_polygon(x: complex, m, tol: float = 1e-9) -> bool:
    if is_infinite(m):
        return abs(x) <= 1 + tol
    if m == 2:
        return abs(x.imag) <= tol and abs(x.real) <= 1 + tol
    return all((np.conj(h.nu) * x).real <= h.rhs + tol for h in polygon_halfspaces(m))


class ParamLayout:
    """Coordinates ``(d, r, t)`` of a Hermitian matrix with real ``<C, X>`` gradients."""

    def __init__(self, n: int, imag: bool):
        self.n = n
        self.imag = imag
        self.iu = np.triu_indices(n, 1)
        self.pairs = self.iu[0].size
        self.pair_index = np.full((n, n), -1, dtype=np.int64)
        self.pair_index[self.iu] = np.arange(self.pairs)
        self.pair_index[self.iu[1], self.iu[0]] = np.arange(self.pairs)
        self.size = n + self.pairs * (2 if imag else 1)

    def r(self, k):
        return self.n + np.asarray(k)

    def t(self, k):
        return self.n + self.pairs + np.asarray(k)

    def gradient(self, c: np.ndarray) -> np.ndarray:
        """Vector g with ``<C, X(x)> = g'x``."""
        c = np.asarray(c)
        g = [np.diag(c).real, 2.0 * c[self.iu].real]
        if self.imag:
            g.append(2.0 * c[self.iu].imag)
        return np.concatenate(g)

    def from_gradient(self, g: np.ndarray) -> np.ndarray:
        n = self.n
        out = np.zeros((n, n), dtype=complex)
        out[np.diag_indices(n)] = g[:n]
        up = g[n:n + self.pairs] / 2.0
        if self.imag:
            up = up + 1j * g[n + self.pairs:] / 2.0
        out[self.iu] = up
        out[self.iu[1], self.iu[0]] = np.conj(up)
        return out

    def matrix(self, x: np.ndarray) -> np.ndarray:
        n = self.n
        out = np.zeros((n, n), dtype=complex)
        out[np.diag_indices(n)] = x[:n]
        up = x[n:n + self.pairs].astype(complex)
        if self.imag:
            up = up + 1j * x[n + self.pairs:]
        out[self.iu] = up
        out[self.iu[1], self.iu[0]] = np.conj(up)
        return out

    def psd_block(self):
        """Sparse L with ``svec(embed(X(x))) = L x``; returns (L, order)."""
        n, P = self.n, self.pairs
        i, j = self.iu
        k = np.arange(P)
        d = np.arange(n)
        if not self.imag:
            rows_a = np.concatenate([d, i])
            rows_b = np.concatenate([d, j])
            cols = np.concatenate([d, self.r(k)])
            vals = np.ones(rows_a.size)
            order = n
        else:
            # Real part appears in both diagonal blocks, imaginary part in the
            # off-diagonal blocks: (i, n+j) = +t, (j, n+i) = -t.
            rows_a = np.concatenate([d, d + n, i, i + n, i, j])
            rows_b = np.concatenate([d, d + n, j, j + n, j + n, i + n])
            cols = np.concatenate([d, d, self.r(k), self.r(k), self.t(k), self.t(k)])
            vals = np.concatenate([np.ones(2 * n + 2 * P), np.ones(P), -np.ones(P)])
            order = 2 * n
        lo, hi = np.minimum(rows_a, rows_b), np.maximum(rows_a, rows_b)
        idx = svec_index(order)[lo, hi]
        scale = np.where(lo == hi, 1.0, SQRT2)
        L = sp.csr_matrix((vals * scale, (idx, cols)), shape=(svec_dim(order), self.size))
        return L, order


@dataclass(frozen=True, eq=False)
class RelaxationModel:
    spec: FeasibleSet
    problem: ConicProblem
    layout: ParamLayout
    objective: np.ndarray
    ineq_rhs: np.ndarray
    constraint_count: int


def constraint_count(kind, n: int, m=INF) -> int:
    """Closed-form count of equality plus inequality rows of a model."""
    spec = FeasibleSet(Kind(kind), n, m)
    pairs = n * (n - 1) // 2
    triples = math.comb(n, 3)
    kind = spec.kind
    if kind == Kind.ELLIPTOPE_INF or (kind == Kind.ELLIPTOPE and is_infinite(spec.m)):
        return n
    if kind == Kind.ELLIPTOPE:
        return n + spec.m * pairs
    if kind == Kind.TRIANGLE:
        return n + spec.m * pairs + (18 if spec.m == 3 else 16) * triples
    if kind == Kind.REAL_ELLIPTOPE3:
        return n + pairs
    return n + pairs + 6 * triples


def _entry_rows(layout: ParamLayout, pair_ids: np.ndarray, coef: np.ndarray):
    """COO pieces for rows ``Re(coef * X_ij)`` (one pair per row)."""
    rows = np.arange(pair_ids.size)
    r_rows, r_cols, r_vals = rows, layout.r(pair_ids), coef.real
    if not layout.imag:
        return r_rows, r_cols, r_vals
    return (np.concatenate([rows, rows]), np.concatenate([r_cols, layout.t(pair_ids)]),
            np.concatenate([r_vals, -coef.imag]))


def _polygon_rows(layout: ParamLayout, m: int):
    P = layout.pairs
    k = np.arange(P)
    if m == 2:
        # Imaginary parts are not parametrized; add -1 <= Re X_ij <= 1.
        rows = np.arange(2 * P)
        cols = layout.r(np.concatenate([k, k]))
        vals = np.concatenate([np.ones(P), -np.ones(P)])
        return rows, cols, vals, np.ones(2 * P)
    parts = []
    for h_id, h in enumerate(polygon_halfspaces(m)):
        rr, cc, vv = _entry_rows(layout, k, np.full(P, np.conj(h.nu)))
        parts.append((rr + h_id * P, cc, vv))
    rows, cols, vals = (np.concatenate(x) for x in zip(*parts))
    return rows, cols, vals, np.full(m * P, math.cos(math.pi / m))


def _template_rows(layout: ParamLayout, templates):
    """Rows ``<Q, X_J> <= rhs`` for every 3-subset J and every template."""
    n = layout.n
    triples = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64).reshape(-1, 3)
    T = triples.shape[0]
    local = ((0, 1), (0, 2), (1, 2))
    rows, cols, vals, rhs = [], [], [], []
    for q_id, cut in enumerate(templates):
        base = q_id * T + np.arange(T)
        for a, b in local:
            pid = layout.pair_index[triples[:, a], triples[:, b]]
            coef = 2.0 * np.conj(cut.Q[a, b])
            rows.append(base)
            cols.append(layout.r(pid))
            vals.append(np.full(T, coef.real))
            if layout.imag:
                rows.append(base)
                cols.append(layout.t(pid))
                vals.append(np.full(T, -coef.imag))
        rhs.append(np.full(T, cut.rhs))
    if not templates or T == 0:
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0), np.zeros(0)
    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
            np.concatenate(rhs))


def build_model(c, spec: FeasibleSet) -> RelaxationModel:
    """Conic model of ``max <C, X>`` over the set described by ``spec``."""
    c = hermitian(c)
    n = spec.n
    if c.shape[0] != n:
        raise ValueError(f"objective has order {c.shape[0]}, expected {n}")
    if spec.is_real and np.max(np.abs(c.imag)) > 1e-12:
        raise ValueError("real reformulations require a real objective")
    m = spec.m
    imag = not (spec.is_real or (not is_infinite(m) and m == 2))
    layout = ParamLayout(n, imag)

    pieces = []  # (rows, cols, vals, rhs)
    if spec.kind in (Kind.ELLIPTOPE, Kind.TRIANGLE) and not is_infinite(m):
        pieces.append(_polygon_rows(layout, m))
    if spec.kind == Kind.TRIANGLE:
        pieces.append(_template_rows(layout, triangle_templates(m)))
    if spec.is_real:
        k = np.arange(layout.pairs)
        pieces.append((k, layout.r(k), -np.ones(layout.pairs), np.full(layout.pairs, 0.5)))
        if spec.kind == Kind.REAL_TRIANGLE3:
            pieces.append(_template_rows(layout, real_facets_cut33()))
    rows_all, cols_all, vals_all, rhs_all = [], [], [], []
    offset = 0
    for rows, cols, vals, rhs in pieces:
        rows_all.append(rows + offset)
        cols_all.append(cols)
        vals_all.append(vals)
        rhs_all.append(rhs)
        offset += rhs.size
    l = offset
    if l:
        G_lp = sp.csr_matrix((np.concatenate(vals_all), (np.concatenate(rows_all),
                              np.concatenate(cols_all))), shape=(l, layout.size))
        rhs = np.concatenate(rhs_all)
    else:
        G_lp = sp.csr_matrix((0, layout.size))
        rhs = np.zeros(0)
    L, order = layout.psd_block()
    G = sp.vstack([G_lp, -L], format="csr")
    h = np.concatenate([rhs, np.zeros(L.shape[0])])
    A = np.zeros((n, layout.size))
    A[np.arange(n), np.arange(n)] = 1.0
    objective = layout.gradient(c)
    problem = ConicProblem(c=objective, G=G, h=h, cone=ConeSpec(nonneg=l, psd=(order,)),
                           A=A, b=np.ones(n), sense="max")
    return RelaxationModel(spec=spec, problem=problem, layout=layout, objective=objective,
                           ineq_rhs=rhs, constraint_count=n + l)


@dataclass(frozen=True, eq=False)
class RelaxResult:
    value: float
    X: np.ndarray
    solution: Solution
    model: RelaxationModel

    @property
    def status(self) -> Status:
        return self.solution.status


def solve_model(model: RelaxationModel, settings: Settings | None = None) -> RelaxResult:
    sol = solve(model.problem, settings)
    if sol.status not in (Status.OPTIMAL, Status.NUMERIC_LIMIT):
        raise RuntimeError(f"relaxation solve ended with status {sol.status.value}")
    x = model.layout.matrix(sol.x)
    value = float(model.objective @ sol.x)
    return RelaxResult(value=value, X=x, solution=sol, model=model)


def solve_relaxation(c, spec: FeasibleSet, settings: Settings | None = None) -> RelaxResult:
    """Maximize ``<C, X>`` over the feasible set ``spec``."""
    return solve_model(build_model(c, spec), settings)


def real_reformulate(c, kind: Kind = Kind.REAL_TRIANGLE3) -> RelaxationModel:
    """Real model over ``Re(E_3^n)`` or ``Re(T(E_3^n))`` for a real objective."""
    c = hermitian(c)
    if np.max(np.abs(c.imag)) > 1e-12:
        raise ValueError("real reformulation requires a real objective")
    kind = Kind(kind)
    if kind not in (Kind.REAL_ELLIPTOPE3, Kind.REAL_TRIANGLE3):
        raise ValueError("kind must be a real reformulation")
    return build_model(c, FeasibleSet(kind, c.shape[0], 3))


def feasibility_residuals(model: RelaxationModel, x: np.ndarray) -> np.ndarray:
    """Slack ``rhs - row(X)`` for every inequality row (nonnegative when feasible)."""
    l = model.problem.cone.nonneg
    vec = model.layout.gradient(x) * 0.0
    n, P = model.layout.n, model.layout.pairs
    vec[:n] = np.diag(x).real
    vec[n:n + P] = x[model.layout.iu].real
    if model.layout.imag:
        vec[n + P:] = x[model.layout.iu].imag
    return model.ineq_rhs - model.problem.G[:l] @ vec


@dataclass
class DualAudit:
    ok: bool
    lambda_min: float
    dual_obj: float
    recomputed_obj: float
    mu: np.ndarray
    omega: np.ndarray


def verify_dual_certificate(model: RelaxationModel, sol: Solution, tol: float = 1e-6) -> DualAudit:
    """Rebuild ``S = Diag(mu) + sum omega_k W_k - C`` and check ``S >= 0``.

    The dual objective ``1'mu + sum omega_k rhs_k`` must match the solver's.
    """
    if sol.status != Status.OPTIMAL:
        raise ValueError("dual certificate audit needs an OPTIMAL solution")
    l = model.problem.cone.nonneg
    mu = np.asarray(sol.y, dtype=float)
    omega = np.asarray(sol.z[:l], dtype=float)
    grad = model.problem.A.T @ mu + model.problem.G[:l].T @ omega - model.objective
    S = model.layout.from_gradient(grad)
    lam = float(np.linalg.eigvalsh(hermitian(S, tol=1e-8))[0])
    recomputed = float(np.sum(mu) + omega @ model.ineq_rhs)
    ok = (lam >= -tol and bool(np.all(omega >= -tol))
          and abs(recomputed - sol.dual_obj) <= tol * max(1.0, abs(sol.dual_obj)))
    return DualAudit(ok=ok, lambda_min=lam, dual_obj=sol.dual_obj, recomputed_obj=recomputed,
                     mu=mu, omega=omega)


def objective_value(c, x) -> float:
    return inner(hermitian(c), x)
