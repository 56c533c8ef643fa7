"""Primal-dual interior-point solver for real conic programs.

Problems are stated in inequality form over a product of a nonnegative
orthant and PSD blocks::

    minimize (or maximize)  c'x
    subject to              G x + s = h,   s in K
                            A x = b

with K stored in scaled symmetric vectorization (off-diagonals times
sqrt(2), upper triangle, row-major), so the cone inner product is the
Euclidean one.  For a minimization the dual is::

    maximize  -h'z - b'y   s.t.  G'z + A'y + c = 0,  z in K

and for a maximization ``G'z + A'y = c`` with dual objective ``h'z + b'y``.

The method is the homogeneous self-dual embedding with Nesterov-Todd
scaling and a Mehrotra predictor-corrector, so that infeasible problems
return Farkas certificates instead of diverging.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

SQRT2 = math.sqrt(2.0)


class Status(str, Enum):
    OPTIMAL = "OPTIMAL"
    PRIMAL_INFEASIBLE = "PRIMAL_INFEASIBLE"
    DUAL_INFEASIBLE = "DUAL_INFEASIBLE"
    NUMERIC_LIMIT = "NUMERIC_LIMIT"


class ModelError(ValueError):
    """Inconsistent problem data."""


def svec_dim(order: int) -> int:
    return order * (order + 1) // 2


def svec(mat: np.ndarray) -> np.ndarray:
    """Scaled vectorization of a symmetric matrix."""
    mat = np.asarray(mat, dtype=float)
    i, j = np.triu_indices(mat.shape[0])
    return np.where(i == j, 1.0, SQRT2) * mat[i, j]


def smat(vec: np.ndarray, order: int) -> np.ndarray:
    """Inverse of :func:`svec`."""
    i, j = np.triu_indices(order)
    vals = np.asarray(vec, dtype=float) / np.where(i == j, 1.0, SQRT2)
    out = np.zeros((order, order))
    out[i, j] = vals
    out[j, i] = vals
    return out


def svec_index(order: int) -> np.ndarray:
    """Matrix of svec positions: ``idx[i, j]`` for ``i <= j`` (and mirrored)."""
    idx = np.zeros((order, order), dtype=np.int64)
    i, j = np.triu_indices(order)
    idx[i, j] = np.arange(i.size)
    idx[j, i] = idx[i, j]
    return idx


@dataclass(frozen=True)
class ConeSpec:
    nonneg: int = 0
    psd: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "psd", tuple(int(k) for k in self.psd))
        if self.nonneg < 0 or any(k <= 0 for k in self.psd):
            raise ModelError("cone sizes must be positive")
        if self.nonneg == 0 and not self.psd:
            raise ModelError("at least one cone is required")

    @property
    def dim(self) -> int:
        return self.nonneg + sum(svec_dim(k) for k in self.psd)

    @property
    def degree(self) -> int:
        return self.nonneg + sum(self.psd)

    def psd_slices(self):
        start = self.nonneg
        for k in self.psd:
            yield k, slice(start, start + svec_dim(k))
            start += svec_dim(k)

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[: self.nonneg] = 1.0
        for k, sl in self.psd_slices():
            e[sl] = svec(np.eye(k))
        return e

    def min_eig(self, v: np.ndarray) -> float:
        vals = [np.min(v[: self.nonneg])] if self.nonneg else []
        for k, sl in self.psd_slices():
            vals.append(np.linalg.eigvalsh(smat(v[sl], k))[0])
        return float(min(vals))


@dataclass(frozen=True, eq=False)
class ConicProblem:
    c: np.ndarray
    G: sp.csr_matrix
    h: np.ndarray
    cone: ConeSpec
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    sense: str = "min"

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        G = sp.csr_matrix(self.G, dtype=float)
        h = np.asarray(self.h, dtype=float).ravel()
        n = c.size
        A = np.zeros((0, n)) if self.A is None else np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.zeros(A.shape[0]) if self.b is None else np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] == 0:
            A = A.reshape(0, n)
        if G.shape != (self.cone.dim, n):
            raise ModelError(f"G has shape {G.shape}, expected {(self.cone.dim, n)}")
        if h.size != self.cone.dim:
            raise ModelError(f"h has length {h.size}, expected {self.cone.dim}")
        if A.shape[1] != n or b.size != A.shape[0]:
            raise ModelError("equality data has inconsistent dimensions")
        if self.sense not in ("min", "max"):
            raise ModelError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for name, val in (("c", c), ("h", h), ("A", A), ("b", b), ("G", G.data)):
            if not np.all(np.isfinite(val)):
                raise ModelError(f"{name} has non-finite entries")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def standard_form(cls, c, A, b, cone: ConeSpec, sense: str = "min"):
        """``optimize c'x s.t. A x = b, x in K``."""
        c = np.asarray(c, dtype=float)
        return cls(c=c, G=-sp.identity(c.size, format="csr"), h=np.zeros(c.size),
                   cone=cone, A=A, b=b, sense=sense)

    @property
    def num_vars(self) -> int:
        return self.c.size

    def to_json(self) -> dict:
        G = self.G.tocoo()
        return {
            "sense": self.sense,
            "cone": {"nonneg": self.cone.nonneg, "psd": list(self.cone.psd)},
            "c": self.c.tolist(),
            "G": {"shape": list(G.shape), "row": G.row.tolist(), "col": G.col.tolist(),
                  "val": G.data.tolist()},
            "h": self.h.tolist(),
            "A": self.A.tolist(),
            "b": self.b.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConicProblem":
        g = data["G"]
        G = sp.coo_matrix((g["val"], (g["row"], g["col"])), shape=tuple(g["shape"]))
        n = len(data["c"])
        A = np.array(data["A"], dtype=float).reshape(-1, n)
        return cls(c=data["c"], G=G, h=data["h"], A=A, b=data["b"],
                   cone=ConeSpec(**data["cone"]), sense=data["sense"])


@dataclass
class Settings:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iters: int = 200
    step_fraction: float = 0.99
    refinement: int = 2
    verbose: bool = False
    debug_path: str | None = None


@dataclass
class Solution:
    """Solver output.

    On OPTIMAL, ``(x, s)`` and ``(y, z)`` are primal and dual solutions.  On
    PRIMAL_INFEASIBLE, ``(y, z)`` is a certificate with ``G'z + A'y = 0``,
    ``z in K`` and ``h'z + b'y = -1``.  On DUAL_INFEASIBLE, ``(x, s)`` is an
    improving ray with ``Gx + s = 0``, ``Ax = 0``, ``s in K`` and objective
    improvement 1 (``c'x = -1`` for minimization, ``+1`` for maximization).
    """

    status: Status
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    z: np.ndarray
    primal_obj: float
    dual_obj: float
    iterations: int
    primal_feas: float
    dual_feas: float
    rel_gap: float
    solve_time: float = 0.0
    log: list = field(default_factory=list, repr=False)

    def psd_blocks(self, cone: ConeSpec, which: str = "s") -> list[np.ndarray]:
        v = getattr(self, which)
        return [smat(v[sl], k) for k, sl in cone.psd_slices()]

    def nonneg_part(self, cone: ConeSpec, which: str = "s") -> np.ndarray:
        return getattr(self, which)[: cone.nonneg]

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in ("primal_obj", "dual_obj", "iterations",
                                            "primal_feas", "dual_feas", "rel_gap", "solve_time")}
        out["status"] = self.status.value
        for k in ("x", "s", "y", "z"):
            out[k] = getattr(self, k).tolist()
        out["log"] = self.log
        return out


# ---------------------------------------------------------------------------
# Nesterov-Todd scaling


def _factor(mat: np.ndarray) -> np.ndarray:
    """Return F with F F' = mat for a (numerically) positive definite matrix."""
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(mat)
        return v * np.sqrt(np.clip(w, 1e-300, None))


class _Scaling:
    """NT scaling W with W z = W^{-T} s = lambda.

    Orthant part: W = diag(d).  PSD block: W(U) = R' U R, with ``ri = R^{-T}``.
    """

    def __init__(self, cone: ConeSpec, s: np.ndarray, z: np.ndarray):
        self.cone = cone
        l = cone.nonneg
        self.d = np.sqrt(s[:l] / z[:l])
        self.lam_lp = np.sqrt(s[:l] * z[:l])
        self.r, self.ri, self.lam_psd = [], [], []
        for k, sl in cone.psd_slices():
            fs = _factor(smat(s[sl], k))
            fz = _factor(smat(z[sl], k))
            u, lam, vt = np.linalg.svd(fz.T @ fs)
            lam = np.clip(lam, 1e-300, None)
            isq = 1.0 / np.sqrt(lam)
            self.r.append(fs @ vt.T * isq)
            self.ri.append(fz @ u * isq)
            self.lam_psd.append(lam)

    def _apply(self, v, lp_fn, psd_fn):
        out = np.empty_like(v)
        l = self.cone.nonneg
        out[:l] = lp_fn(v[:l])
        for b, (k, sl) in enumerate(self.cone.psd_slices()):
            out[sl] = svec(psd_fn(b, smat(v[sl], k)))
        return out

    def w(self, v):  # W v
        return self._apply(v, lambda x: self.d * x, lambda b, m: self.r[b].T @ m @ self.r[b])

    def w_inv_t(self, v):  # W^{-T} v
        return self._apply(v, lambda x: x / self.d, lambda b, m: self.ri[b].T @ m @ self.ri[b])

    def w_t(self, v):  # W^T v
        return self._apply(v, lambda x: self.d * x, lambda b, m: self.r[b] @ m @ self.r[b].T)

    def w_inv(self, v):  # W^{-1} v
        return self._apply(v, lambda x: x / self.d, lambda b, m: self.ri[b] @ m @ self.ri[b].T)

    def lam(self) -> np.ndarray:
        out = np.zeros(self.cone.dim)
        l = self.cone.nonneg
        out[:l] = self.lam_lp
        for b, (k, sl) in enumerate(self.cone.psd_slices()):
            out[sl] = svec(np.diag(self.lam_psd[b]))
        return out

    def lam_sq(self) -> np.ndarray:
        out = np.zeros(self.cone.dim)
        l = self.cone.nonneg
        out[:l] = self.lam_lp**2
        for b, (k, sl) in enumerate(self.cone.psd_slices()):
            out[sl] = svec(np.diag(self.lam_psd[b] ** 2))
        return out

    def lam_solve(self, r: np.ndarray) -> np.ndarray:
        """Solve ``lambda o u = r`` for u."""
        out = np.empty_like(r)
        l = self.cone.nonneg
        out[:l] = r[:l] / self.lam_lp
        for b, (k, sl) in enumerate(self.cone.psd_slices()):
            lam = self.lam_psd[b]
            out[sl] = svec(2.0 * smat(r[sl], k) / (lam[:, None] + lam[None, :]))
        return out

    def max_step(self, ds: np.ndarray) -> float:
        """Largest t with lambda + t*ds in K (inf if unbounded)."""
        l = self.cone.nonneg
        t = math.inf
        if l:
            neg = ds[:l] < 0
            if np.any(neg):
                t = min(t, float(np.min(-self.lam_lp[neg] / ds[:l][neg])))
        for b, (k, sl) in enumerate(self.cone.psd_slices()):
            isq = 1.0 / np.sqrt(self.lam_psd[b])
            m = smat(ds[sl], k) * isq[:, None] * isq[None, :]
            e = np.linalg.eigvalsh(m)[0]
            if e < 0:
                t = min(t, -1.0 / e)
        return t


def _jordan(cone: ConeSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    l = cone.nonneg
    out[:l] = a[:l] * b[:l]
    for k, sl in cone.psd_slices():
        ma, mb = smat(a[sl], k), smat(b[sl], k)
        out[sl] = svec(0.5 * (ma @ mb + mb @ ma))
    return out


# ---------------------------------------------------------------------------
# KKT system


class _PsdBlockHessian:
    """Precomputed sparsity of one PSD block of G for forming G' (W'W)^{-1} G."""

    def __init__(self, Gblk: sp.csr_matrix, order: int):
        coo = Gblk.tocoo()
        ii, jj = np.triu_indices(order)
        self.order = order
        self.p = Gblk.shape[1]
        ri, rj = ii[coo.row], jj[coo.row]
        scale = np.where(ri == rj, 1.0, 1.0 / SQRT2)
        # Full-matrix entries of each column's symmetric matrix.
        off = ri != rj
        self.ent_i = np.concatenate([ri, rj[off]])
        self.ent_j = np.concatenate([rj, ri[off]])
        self.ent_col = np.concatenate([coo.col, coo.col[off]])
        self.ent_val = np.concatenate([coo.data * scale, (coo.data * scale)[off]])
        order_idx = np.argsort(self.ent_col, kind="stable")
        self.ent_i, self.ent_j = self.ent_i[order_idx], self.ent_j[order_idx]
        self.ent_col, self.ent_val = self.ent_col[order_idx], self.ent_val[order_idx]
        self.bounds = np.searchsorted(self.ent_col, np.arange(self.p + 1))
        # Gather positions: svec rows with nonzeros, value weight for <M_a, Y>.
        self.g_row_i, self.g_row_j = ri, rj
        self.g_col = coo.col
        self.g_val = coo.data * np.where(ri == rj, 1.0, SQRT2)
        self.cols = np.unique(coo.col)

    def hessian(self, t: np.ndarray) -> np.ndarray:
        """Return H[a, b] = <M_a, T M_b T>."""
        p = self.p
        H = np.zeros((p, p))
        for b in self.cols:
            lo, hi = self.bounds[b], self.bounds[b + 1]
            y = t[:, self.ent_i[lo:hi]] @ (self.ent_val[lo:hi, None] * t[self.ent_j[lo:hi], :])
            vals = self.g_val * y[self.g_row_i, self.g_row_j]
            H[:, b] = np.bincount(self.g_col, weights=vals, minlength=p)
        return H


class _KKT:
    """Factorization of [[0, A', G'], [A, 0, 0], [G, 0, -W'W]]."""

    def __init__(self, prob, scaling: _Scaling, psd_hess, refinement: int):
        self.prob = prob
        self.W = scaling
        self.refinement = refinement
        G, A = prob.G, prob.A
        l = prob.cone.nonneg
        p = prob.c.size
        H = np.zeros((p, p))
        if l:
            Gl = G[:l]
            w = 1.0 / scaling.d**2
            H += (Gl.T @ Gl.multiply(w[:, None])).toarray()
        for b, hb in enumerate(psd_hess):
            ri = scaling.ri[b]
            H += hb.hessian(ri @ ri.T)
        H = 0.5 * (H + H.T)
        self.H = H
        self.lu = None
        # Any rho > 0 gives the same solution; matching the scale of H keeps
        # the equality rows from being swamped as H grows near the optimum.
        self.rho = max(1.0, float(np.max(np.abs(np.diag(H))))) if p else 1.0
        K = H + self.rho * (A.T @ A)
        try:
            self.chol = sla.cho_factor(K, lower=True, check_finite=False)
            if A.shape[0]:
                KiAt = sla.cho_solve(self.chol, A.T, check_finite=False)
                S = A @ KiAt
                self.chol_s = sla.cho_factor(0.5 * (S + S.T), lower=True, check_finite=False)
                self.KiAt = KiAt
        except (np.linalg.LinAlgError, sla.LinAlgError):
            self._lu_fallback()

    def _lu_fallback(self):
        A = self.prob.A
        q, p = A.shape
        M = np.zeros((p + q, p + q))
        M[:p, :p] = self.H
        M[:p, p:] = A.T
        M[p:, :p] = A
        M[p:, p:] = -1e-14 * np.eye(q)
        M[:p, :p] += 1e-14 * max(1.0, np.max(np.abs(np.diag(self.H)))) * np.eye(p)
        self.lu = sla.lu_factor(M, check_finite=False)
        if not np.all(np.isfinite(self.lu[0])):
            raise np.linalg.LinAlgError("KKT factorization failed")

    def _solve_once(self, bx, by, bz):
        prob, W = self.prob, self.W
        A = prob.A
        wbz = W.w_inv(W.w_inv_t(bz))
        r1 = bx + prob.G.T @ wbz
        p = prob.c.size
        if self.lu is not None:
            sol = sla.lu_solve(self.lu, np.concatenate([r1, by]), check_finite=False)
            ux, uy = sol[:p], sol[p:]
        elif A.shape[0]:
            r1a = r1 + self.rho * (A.T @ by)
            t = sla.cho_solve(self.chol, r1a, check_finite=False)
            uy = sla.cho_solve(self.chol_s, A @ t - by, check_finite=False)
            ux = t - self.KiAt @ uy
        else:
            ux = sla.cho_solve(self.chol, r1, check_finite=False)
            uy = np.zeros(0)
        uz = W.w_inv(W.w_inv_t(prob.G @ ux - bz))
        return ux, uy, uz

    def solve(self, bx, by, bz):
        prob, W = self.prob, self.W
        ux, uy, uz = self._solve_once(bx, by, bz)
        for _ in range(self.refinement):
            rx = bx - (prob.A.T @ uy + prob.G.T @ uz)
            ry = by - prob.A @ ux
            rz = bz - (prob.G @ ux - W.w_t(W.w(uz)))
            ex, ey, ez = self._solve_once(rx, ry, rz)
            ux, uy, uz = ux + ex, uy + ey, uz + ez
        return ux, uy, uz


# ---------------------------------------------------------------------------
# Presolve


def _presolve_equalities(A, b, tol=1e-10):
    """Indices of independent rows of A (pivoted QR), plus a residual if b is inconsistent."""
    q = A.shape[0]
    if q == 0:
        return np.arange(0), None
    _, R, piv = sla.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(diag > tol * diag[0]))
    keep = np.sort(piv[:rank])
    if rank < q:
        Ak, bk = A[keep], b[keep]
        xls = np.linalg.lstsq(Ak, bk, rcond=None)[0] if rank else np.zeros(A.shape[1])
        r = b - A @ xls
        if np.linalg.norm(r) > 1e-9 * (1.0 + np.linalg.norm(b)):
            return keep, r
    return keep, None


# ---------------------------------------------------------------------------
# Main loop


def _empty_solution(prob, status, x=None, s=None, y=None, z=None, iters=0):
    n, dim, q = prob.c.size, prob.cone.dim, prob.A.shape[0]
    return Solution(status=status,
                    x=np.zeros(n) if x is None else x, s=np.zeros(dim) if s is None else s,
                    y=np.zeros(q) if y is None else y, z=np.zeros(dim) if z is None else z,
                    primal_obj=math.nan, dual_obj=math.nan, iterations=iters,
                    primal_feas=math.nan, dual_feas=math.nan, rel_gap=math.nan)


def solve(problem: ConicProblem, settings: Settings | None = None) -> Solution:
    """Solve ``problem`` and return a :class:`Solution`."""
    settings = settings or Settings()
    t0 = time.perf_counter()
    sol = _solve(problem, settings)
    sol.solve_time = time.perf_counter() - t0
    if settings.debug_path:
        with open(settings.debug_path, "w") as fh:
            json.dump({"problem": problem.to_json(), "solution": sol.to_json()}, fh)
    return sol


def _solve(problem: ConicProblem, settings: Settings) -> Solution:
    sign = 1.0 if problem.sense == "min" else -1.0
    cone = problem.cone
    c = sign * problem.c
    G, h = problem.G, problem.h
    keep, bad = _presolve_equalities(problem.A, problem.b)
    A, b = problem.A[keep], problem.b[keep]

    def lift_y(y_kept):
        # Dropped rows get zero multipliers.
        y = np.zeros(problem.A.shape[0])
        y[keep] = y_kept
        return y

    if bad is not None:
        y = -bad / float(bad @ problem.b)
        return _empty_solution(problem, Status.PRIMAL_INFEASIBLE, y=y)

    # Column rank of [A; G]: free directions either are unbounded or can be dropped.
    p = c.size
    M0 = (G.T @ G).toarray() + A.T @ A
    basis = None
    try:
        np.linalg.cholesky(M0 + 1e-13 * max(1.0, np.max(np.abs(M0))) * np.eye(p))
        w0 = np.linalg.eigvalsh(M0) if p <= 64 else None
        if w0 is not None and w0[0] <= 1e-10 * max(1.0, w0[-1]):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        w0, v0 = np.linalg.eigh(M0)
        null = w0 <= 1e-10 * max(1.0, w0[-1])
        if np.any(null):
            N = v0[:, null]
            cn = N @ (N.T @ c)
            if np.linalg.norm(cn) > 1e-9 * max(1.0, np.linalg.norm(c)):
                x = -cn / float(c @ cn)
                return _empty_solution(problem, Status.DUAL_INFEASIBLE, x=x)
            basis = v0[:, ~null]
    if basis is not None:
        reduced = ConicProblem(c=basis.T @ c, G=sp.csr_matrix(G @ basis), h=h, cone=cone,
                               A=A @ basis, b=b, sense="min")
        sol = _hsde(reduced, settings)
        sol.x = basis @ sol.x
    else:
        reduced = ConicProblem(c=c, G=G, h=h, cone=cone, A=A, b=b, sense="min")
        sol = _hsde(reduced, settings)
    sol.y = lift_y(sol.y)
    if sign < 0:
        sol.primal_obj, sol.dual_obj = -sol.primal_obj, -sol.dual_obj
    return sol


def _hsde(prob: ConicProblem, st: Settings) -> Solution:
    cone = prob.cone
    c, G, h, A, b = prob.c, prob.G, prob.h, prob.A, prob.b
    p, q, dim = c.size, A.shape[0], cone.dim
    e = cone.identity()
    nu = cone.degree
    psd_hess = [_PsdBlockHessian(G[sl], k) for k, sl in cone.psd_slices()]
    resx0 = max(1.0, np.linalg.norm(c))
    resy0 = max(1.0, np.linalg.norm(b))
    resz0 = max(1.0, np.linalg.norm(h))

    # Initial point from two least-squares problems with W = I.
    class _Identity(_Scaling):
        def __init__(self, cone):
            self.cone = cone
            self.d = np.ones(cone.nonneg)
            self.r = [np.eye(k) for k in cone.psd]
            self.ri = [np.eye(k) for k in cone.psd]

    log = []
    try:
        kkt0 = _KKT(prob, _Identity(cone), psd_hess, st.refinement)
    except np.linalg.LinAlgError:
        return _empty_solution(prob, Status.NUMERIC_LIMIT)
    x, y, zz = kkt0.solve(np.zeros(p), b, h)
    s = -zz
    _, y, z = kkt0.solve(-c, np.zeros(q), np.zeros(dim))
    for v in (s, z):
        t = -cone.min_eig(v)
        if t >= -1e-8 * max(np.linalg.norm(v), 1.0):
            v += (1.0 + t) * e
    tau, kappa = 1.0, 1.0

    best = None
    status = Status.NUMERIC_LIMIT
    stall = 0
    it = 0
    for it in range(st.max_iters + 1):
        hrx = A.T @ y + G.T @ z
        hry = A @ x
        hrz = G @ x + s
        rx = hrx + c * tau
        ry = hry - b * tau
        rz = hrz - h * tau
        cx, by, hz = float(c @ x), float(b @ y), float(h @ z)
        rt = kappa + cx + by + hz
        gap = float(s @ z)
        mu = (gap + tau * kappa) / (nu + 1)
        pcost, dcost = cx / tau, -(by + hz) / tau
        pres = max(np.linalg.norm(ry) / resy0, np.linalg.norm(rz) / resz0) / tau
        dres = np.linalg.norm(rx) / resx0 / tau
        relgap = max(abs(pcost - dcost), gap / tau**2) / (1.0 + abs(pcost))
        pinf = np.linalg.norm(hrx) / resx0 / -(hz + by) if hz + by < 0 else math.inf
        dinf = (max(np.linalg.norm(hry) / resy0, np.linalg.norm(hrz) / resz0) / -cx
                if cx < 0 else math.inf)
        log.append({"iter": it, "pcost": pcost, "dcost": dcost, "pres": pres, "dres": dres,
                    "gap": relgap, "tau": tau, "kappa": kappa})
        if st.verbose:
            print(f"{it:3d} {pcost: .8e} {dcost: .8e} pres {pres:.1e} dres {dres:.1e} "
                  f"gap {relgap:.1e} k/t {kappa / tau:.1e}")
        score = max(pres, dres, relgap)
        if best is None or score < best[0]:
            best = (score, x / tau, s / tau, y / tau, z / tau, pcost, dcost, pres, dres, relgap)
        if pres <= st.feas_tol and dres <= st.feas_tol and relgap <= st.gap_tol:
            status = Status.OPTIMAL
            break
        if pinf <= st.feas_tol:
            scale = -(hz + by)
            return Solution(Status.PRIMAL_INFEASIBLE, x=np.zeros(p), s=np.zeros(dim),
                            y=y / scale, z=z / scale, primal_obj=math.nan, dual_obj=math.nan,
                            iterations=it, primal_feas=math.nan, dual_feas=float(pinf),
                            rel_gap=math.nan, log=log)
        if dinf <= st.feas_tol:
            return Solution(Status.DUAL_INFEASIBLE, x=x / -cx, s=s / -cx, y=np.zeros(q),
                            z=np.zeros(dim), primal_obj=math.nan, dual_obj=math.nan,
                            iterations=it, primal_feas=float(dinf), dual_feas=math.nan,
                            rel_gap=math.nan, log=log)
        if it == st.max_iters:
            break

        try:
            W = _Scaling(cone, s, z)
            kkt = _KKT(prob, W, psd_hess, st.refinement)
            x1, y1, z1 = kkt.solve(-c, b, h)
        except (np.linalg.LinAlgError, ValueError):
            break
        lam = W.lam()
        lamsq = W.lam_sq()
        denom = -kappa / tau + float(c @ x1 + b @ y1 + h @ z1)

        def direction(rc, rk, eta):
            u = W.lam_solve(rc)
            x2, y2, z2 = kkt.solve(-(1 - eta) * rx, -(1 - eta) * ry, -(1 - eta) * rz - W.w_t(u))
            dtau = (-(1 - eta) * rt - rk / tau - float(c @ x2 + b @ y2 + h @ z2)) / denom
            dx, dy, dz = x2 + dtau * x1, y2 + dtau * y1, z2 + dtau * z1
            dkappa = (rk - kappa * dtau) / tau
            dzs = W.w(dz)
            # Taking ds from the linearized primal equation keeps r_z decreasing
            # exactly; W' (u - W dz) loses digits once W is ill-conditioned.
            ds = -(1 - eta) * rz - G @ dx + h * dtau
            dss = W.w_inv_t(ds)
            return dx, dy, dz, dtau, dss, dzs, dkappa, ds

        def steplen(dss, dzs, dtau, dkappa):
            t = min(W.max_step(dss), W.max_step(dzs))
            if dtau < 0:
                t = min(t, -tau / dtau)
            if dkappa < 0:
                t = min(t, -kappa / dkappa)
            return t

        aff = direction(-lamsq, -tau * kappa, 0.0)
        step_aff = min(1.0, steplen(aff[4], aff[5], aff[3], aff[6]))
        sigma = (1.0 - step_aff) ** 3
        rc = -lamsq - _jordan(cone, aff[4], aff[5]) + sigma * mu * e
        rk = -tau * kappa - aff[3] * aff[6] + sigma * mu
        dx, dy, dz, dtau, dss, dzs, dkappa, ds = direction(rc, rk, sigma)
        step = min(1.0, st.step_fraction * steplen(dss, dzs, dtau, dkappa))
        if not np.isfinite(step) or step < 1e-10:
            stall += 1
            if stall >= 3:
                break
            continue
        x = x + step * dx
        y = y + step * dy
        z = z + step * dz
        s = s + step * ds
        tau += step * dtau
        kappa += step * dkappa
        # Keep iterates strictly interior despite roundoff in the unscaled update.
        if cone.min_eig(s) <= 0 or cone.min_eig(z) <= 0:
            break

    _, xb, sb, yb, zb, pcost, dcost, pres, dres, relgap = best
    return Solution(status, x=xb, s=sb, y=yb, z=zb, primal_obj=pcost, dual_obj=dcost,
                    iterations=it, primal_feas=float(pres), dual_feas=float(dres),
                    rel_gap=float(relgap), log=log)
