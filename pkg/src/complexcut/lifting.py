"""Moment liftings of the infinite complex cut polytope.

A basis ``B`` is an ordered list of integer exponent vectors in ``Z^p``
starting with the zero vector.  The moment matrix ``M[a, b] = y[alpha_a -
alpha_b]`` has unit diagonal and one complex variable per difference vector
up to sign: ``y[-d] = conj(y[d])``.  When the first ``p + 1`` basis elements
are ``0, e_1, ..., e_p`` the top-left block of ``M`` is the matrix ``X`` of
order ``n = p + 1`` being relaxed.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .conic import SQRT2, ConeSpec, ConicProblem, Settings, Solution, Status, solve, svec_dim, svec_index
from .linalg import hermitian, inner


@dataclass(frozen=True, eq=False)
class MomentBasis:
    exponents: np.ndarray
    name: str = ""

    def __post_init__(self):
        exps = np.atleast_2d(np.asarray(self.exponents, dtype=np.int64))
        if exps.shape[0] == 0 or np.any(exps[0] != 0):
            raise ValueError("basis must start with the zero vector")
        if len({tuple(r) for r in exps}) != exps.shape[0]:
            raise ValueError("basis has duplicate exponents")
        object.__setattr__(self, "exponents", exps)

    @property
    def p(self) -> int:
        return self.exponents.shape[1]

    def __len__(self) -> int:
        return self.exponents.shape[0]

    @property
    def has_units_first(self) -> bool:
        head = self.exponents[1:self.p + 1]
        return head.shape[0] == self.p and np.array_equal(head, np.eye(self.p, dtype=np.int64))

    def to_json(self) -> dict:
        return {"name": self.name, "exponents": self.exponents.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "MomentBasis":
        return cls(np.array(data["exponents"], dtype=np.int64), data.get("name", ""))


def _basis(rows, name) -> MomentBasis:
    return MomentBasis(np.array(rows, dtype=np.int64), name)


def _units(p: int) -> list[list[int]]:
    return [[0] * p] + np.eye(p, dtype=np.int64).tolist()


def standard_bases() -> dict[str, MomentBasis]:
    """The six bases ``b1..b6`` for four nodes (``p = 3``, ``b3`` has ``p = 4``)."""
    b1 = _units(3) + [[-1, 1, 0], [-1, 0, 1]]
    b2 = b1 + [[0, -1, 1]]
    g = np.array([[1, 1, 1], [-1, 0, 0], [0, -1, 0], [0, 0, -1]])
    b3 = [list(g @ np.array(a)) for a in b2]
    b4 = A_basis(3).exponents.tolist()
    b5 = _units(3) + [[1, 1, 0], [0, 1, 1]]
    b6 = b1 + [[1, 1, 0], [0, 1, 1]]
    return {"b1": _basis(b1, "b1"), "b2": _basis(b2, "b2"), "b3": _basis(b3, "b3"),
            "b4": _basis(b4, "b4"), "b5": _basis(b5, "b5"), "b6": _basis(b6, "b6")}


def tilde_A_basis(p: int) -> MomentBasis:
    """0/1 vectors of weight at most 2, units first."""
    if p < 3:
        raise ValueError("p must be at least 3")
    rows = _units(p)
    for i, j in itertools.combinations(range(p), 2):
        r = [0] * p
        r[i] = r[j] = 1
        rows.append(r)
    return _basis(rows, f"atilde{p}")


def A_basis(p: int) -> MomentBasis:
    """``tilde_A_basis(p)`` plus the squared unit vectors ``2 e_i``."""
    rows = tilde_A_basis(p).exponents.tolist()
    for i in range(p):
        r = [0] * p
        r[i] = 2
        rows.append(r)
    return _basis(rows, f"a{p}")


def cp_size(n: int, frac: float) -> int:
    return n + math.floor(frac * math.comb(n - 1, 2) + 0.5)


def _cp_from_order(n: int, frac: float, order: np.ndarray) -> MomentBasis:
    p = n - 1
    pairs = list(itertools.combinations(range(p), 2))
    k = cp_size(n, frac) - n
    rows = _units(p)
    for idx in np.sort(order[:k]):
        r = [0] * p
        i, j = pairs[idx]
        r[i] = r[j] = 1
        rows.append(r)
    return _basis(rows, f"cp{frac:g}")


def _check_cp(n: int, frac: float) -> None:
    if n < 4:
        raise ValueError("n must be at least 4")
    if not 0.0 <= frac <= 1.0:
        raise ValueError("frac must lie in [0, 1]")


def cp_basis(n: int, frac: float, rng: np.random.Generator | None = None) -> MomentBasis:
    """Units plus a uniformly sampled fraction ``frac`` of the weight-2 0/1 vectors."""
    _check_cp(n, frac)
    total = math.comb(n - 1, 2)
    k = cp_size(n, frac) - n
    if 0 < k < total:
        if rng is None:
            raise ValueError("a generator is required for 0 < frac < 1")
        order = rng.permutation(total)
    else:
        order = np.arange(total)
    return _cp_from_order(n, frac, order)


def nested_cp_bases(n: int, fracs, rng: np.random.Generator) -> list[MomentBasis]:
    """Bases for several fractions drawn from one permutation, so they are nested."""
    for f in fracs:
        _check_cp(n, f)
    order = rng.permutation(math.comb(n - 1, 2))
    return [_cp_from_order(n, f, order) for f in fracs]


def resolve_basis(name: str, n: int = 4, rng=None) -> MomentBasis:
    """Basis from a CLI name: ``b1..b6``, ``atilde``, ``a`` or ``cp:<frac>``."""
    name = name.lower()
    if name in ("b1", "b2", "b3", "b4", "b5", "b6"):
        return standard_bases()[name]
    if name == "atilde":
        return tilde_A_basis(n - 1)
    if name == "a":
        return A_basis(n - 1)
    if name.startswith("cp:"):
        return cp_basis(n, float(name[3:]), rng)
    raise ValueError(f"unknown basis {name!r}")


def canonical_difference(d) -> tuple[tuple[int, ...], bool]:
    """Return ``(key, conj)`` with the first nonzero entry of ``key`` positive."""
    d = tuple(int(v) for v in d)
    for v in d:
        if v != 0:
            return (d, False) if v > 0 else (tuple(-w for w in d), True)
    return d, False


@dataclass(frozen=True, eq=False)
class MomentModel:
    basis: MomentBasis
    var_index: dict
    var_id: np.ndarray      # (N, N) variable id per cell, -1 on the fixed y_0 cells
    conj: np.ndarray        # (N, N) True where the cell holds conj(y)

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def n_vars(self) -> int:
        return len(self.var_index)

    def matrix(self, y: np.ndarray) -> np.ndarray:
        """Moment matrix for complex variable values ``y``."""
        # Index -1 (the fixed y_0 cells) picks the appended 1.
        y = np.append(np.asarray(y, dtype=complex), 1.0)
        vals = y[self.var_id]
        return np.where(self.conj, np.conj(vals), vals)


def build_moment_model(basis: MomentBasis) -> MomentModel:
    exps = basis.exponents
    N = exps.shape[0]
    var_index: dict = {}
    var_id = np.full((N, N), -1, dtype=np.int64)
    conj = np.zeros((N, N), dtype=bool)
    for a in range(N):
        for b in range(N):
            key, flip = canonical_difference(exps[a] - exps[b])
            if not any(key):
                continue
            if key not in var_index:
                var_index[key] = len(var_index)
            var_id[a, b] = var_index[key]
            conj[a, b] = flip
    return MomentModel(basis=basis, var_index=var_index, var_id=var_id, conj=conj)


def _moment_operator(model: MomentModel):
    """Sparse ``L`` and constant ``h0`` with ``svec(embed(M)) = h0 + L x``.

    ``x`` stacks ``Re y`` then ``Im y``.
    """
    N, V = model.size, model.n_vars
    order = 2 * N
    idx = svec_index(order)
    rows, cols, vals = [], [], []
    iu = np.triu_indices(N, 1)
    vid = model.var_id[iu]
    sgn = np.where(model.conj[iu], -1.0, 1.0)
    i, j = iu
    mask = vid >= 0
    i, j, vid, sgn = i[mask], j[mask], vid[mask], sgn[mask]
    # Real part on both diagonal blocks; Im M_ij at (i, N+j) and -Im M_ij at (j, N+i).
    for a, b, c, v in ((i, j, vid, np.ones_like(sgn)), (i + N, j + N, vid, np.ones_like(sgn)),
                       (i, j + N, vid + V, sgn), (j, i + N, vid + V, -sgn)):
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        rows.append(idx[lo, hi])
        cols.append(c)
        vals.append(SQRT2 * v)
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(svec_dim(order), 2 * V))
    h0 = np.zeros(svec_dim(order))
    d = np.arange(order)
    h0[idx[d, d]] = 1.0
    return L, h0, order


def _block_vars(model: MomentModel, n: int):
    """Variable ids and conjugation flags of the strict upper ``n x n`` block."""
    iu = np.triu_indices(n, 1)
    return iu, model.var_id[iu], model.conj[iu]


@dataclass(frozen=True, eq=False)
class LiftResult:
    value: float
    X: np.ndarray
    M: np.ndarray
    solution: Solution
    model: MomentModel


def _check_lifted(n: int, model: MomentModel) -> None:
    """The first ``n`` basis rows must index ``n(n-1)/2`` distinct free entries."""
    if model.size < n:
        raise ValueError(f"basis has {model.size} elements, need at least {n}")
    vid = model.var_id[np.triu_indices(n, 1)]
    if np.any(vid < 0) or np.unique(vid).size != vid.size:
        raise ValueError("the leading block of the moment matrix does not parametrize X")


def lifted_max(c, basis: MomentBasis, settings: Settings | None = None) -> LiftResult:
    """Maximize ``<C, X>`` over matrices ``X`` extendable to a PSD moment matrix."""
    c = hermitian(c)
    n = c.shape[0]
    model = build_moment_model(basis)
    _check_lifted(n, model)
    L, h0, order = _moment_operator(model)
    V = model.n_vars
    iu, vid, flip = _block_vars(model, n)
    obj = np.zeros(2 * V)
    # <C, X> = sum(diag C) + 2 sum_{i<j} Re(conj(C_ij) X_ij); X_ij = a +/- i b.
    np.add.at(obj, vid, 2.0 * c[iu].real)
    np.add.at(obj, vid + V, np.where(flip, -2.0, 2.0) * c[iu].imag)
    prob = ConicProblem(c=obj, G=-L, h=h0, cone=ConeSpec(psd=(order,)), sense="max")
    sol = solve(prob, settings)
    if sol.status not in (Status.OPTIMAL, Status.NUMERIC_LIMIT):
        raise RuntimeError(f"lifted solve ended with status {sol.status.value}")
    y = sol.x[:V] + 1j * sol.x[V:]
    M = model.matrix(y)
    X = M[:n, :n]
    value = float(np.trace(c).real + obj @ sol.x)
    return LiftResult(value=value, X=X, M=M, solution=sol, model=model)


def projection_distance(a, basis: MomentBasis | None = None, settings: Settings | None = None) -> float:
    """``min ||Z[:n, :n] - A||_F`` over PSD moment matrices ``Z`` of ``basis``.

    The norm is bounded through the Schur block ``[[t I, d], [d', t]] >= 0``
    where ``d`` is the real vector of the strict upper differences scaled by
    ``sqrt(2)``.
    """
    a = hermitian(a, tol=1e-9)
    basis = basis or standard_bases()["b1"]
    n = a.shape[0]
    if np.max(np.abs(np.diag(a) - 1.0)) > 1e-8:
        raise ValueError("A must have a unit diagonal")
    model = build_moment_model(basis)
    _check_lifted(n, model)
    L, h0, order = _moment_operator(model)
    V = model.n_vars
    iu, vid, flip = _block_vars(model, n)
    P = vid.size
    k = np.arange(P)
    # d = sqrt2 * [Re X_ij - Re A_ij, Im X_ij - Im A_ij]
    D = sp.csr_matrix((np.concatenate([np.full(P, SQRT2), SQRT2 * np.where(flip, -1.0, 1.0)]),
                       (np.concatenate([k, k + P]), np.concatenate([vid, vid + V]))),
                      shape=(2 * P, 2 * V))
    d0 = -SQRT2 * np.concatenate([a[iu].real, a[iu].imag])
    q = 2 * P + 1
    sidx = svec_index(q)
    # Slack of the Schur block: t on the diagonal, sqrt2 * d_r at (r, 2P).
    Dc = D.tocoo()
    diag_rows = sidx[np.arange(q), np.arange(q)]
    off_rows = sidx[np.arange(2 * P), 2 * P]
    schur = sp.csr_matrix(
        (np.concatenate([np.ones(q), SQRT2 * Dc.data]),
         (np.concatenate([diag_rows, off_rows[Dc.row]]),
          np.concatenate([np.full(q, 2 * V), Dc.col]))),
        shape=(svec_dim(q), 2 * V + 1))
    hs = np.zeros(svec_dim(q))
    hs[off_rows] = SQRT2 * d0
    G = sp.vstack([sp.hstack([-L, sp.csr_matrix((L.shape[0], 1))]), -schur], format="csr")
    h = np.concatenate([h0, hs])
    obj = np.zeros(2 * V + 1)
    obj[-1] = 1.0
    prob = ConicProblem(c=obj, G=G, h=h, cone=ConeSpec(psd=(order, q)), sense="min")
    sol = solve(prob, settings)
    if sol.status not in (Status.OPTIMAL, Status.NUMERIC_LIMIT):
        raise RuntimeError(f"distance solve ended with status {sol.status.value}")
    return max(float(sol.x[-1]), 0.0)


def save_basis(path, basis: MomentBasis) -> None:
    Path(path).write_text(json.dumps(basis.to_json()))


def objective_value(c, x) -> float:
    return inner(hermitian(c), x)
