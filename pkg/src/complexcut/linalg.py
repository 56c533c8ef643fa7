"""Dense Hermitian linear algebra, roots of unity and the phase group action.

Hermitian matrices are plain complex ``numpy`` arrays; :func:`hermitian`
validates and symmetrizes them at the boundary of every public routine.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

INF = math.inf

HERMITIAN_TOL = 1e-12
RANK_TOL = 1e-5


class NotHermitianError(ValueError):
    """Matrix is not Hermitian within tolerance."""


class NotPSDError(ValueError):
    """Matrix has an eigenvalue below the admissible negative tolerance."""

    def __init__(self, lambda_min: float):
        super().__init__(f"matrix is not PSD: lambda_min = {lambda_min:.3e}")
        self.lambda_min = lambda_min


class ConvergenceError(RuntimeError):
    """Iterative eigensolver hit its sweep cap."""

    def __init__(self, residual: float):
        super().__init__(f"Jacobi iteration did not converge, residual {residual:.3e}")
        self.residual = residual


def is_infinite(m) -> bool:
    return m is None or (isinstance(m, float) and math.isinf(m))


def check_order(m) -> None:
    """Raise unless ``m`` is an integer >= 2 or infinite."""
    if is_infinite(m):
        return
    if int(m) != m or m < 2:
        raise ValueError(f"m must be an integer >= 2 or infinite, got {m!r}")


def roots_of_unity(m: int) -> np.ndarray:
    """Return ``exp(2*pi*i*k/m)`` for ``k = 1..m``; the last entry is exactly 1."""
    if is_infinite(m) or int(m) != m or m < 2:
        raise ValueError(f"roots_of_unity needs a finite integer m >= 2, got {m!r}")
    m = int(m)
    k = np.arange(1, m + 1) % m
    z = np.exp(2j * np.pi * k / m)
    z[-1] = 1.0
    return z


def hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``a`` as Hermitian and return ``(a + a*)/2`` as a new array.

    The asymmetry tolerance is relative to ``max(1, max|a_ij|)`` so that
    products such as ``D* D`` with large entries are accepted.
    """
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.conj().T)))
    if asym > tol * scale:
        raise NotHermitianError(f"max |A_ij - conj(A_ji)| = {asym:.3e}")
    out = 0.5 * (a + a.conj().T)
    out[np.diag_indices_from(out)] = out.diagonal().real
    return out


def phase_vector(alpha, tol: float = 1e-12) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=complex).ravel()
    if np.any(np.abs(np.abs(alpha) - 1.0) > tol):
        raise ValueError("phase vector entries must have unit modulus")
    return alpha


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Trace inner product ``<A, B> = Tr(AB)`` of two Hermitian matrices."""
    return float(np.vdot(b, a).real)


def real_embed(a) -> np.ndarray:
    """Map Hermitian ``A`` to the symmetric ``[[Re A, Im A], [-Im A, Re A]]``."""
    a = hermitian(a)
    re, im = a.real, a.imag
    return np.block([[re, im], [-im, re]])


def real_unembed(s: np.ndarray) -> np.ndarray:
    """Inverse of :func:`real_embed`, averaging the two redundant copies."""
    s = np.asarray(s, dtype=float)
    n = s.shape[0] // 2
    re = 0.5 * (s[:n, :n] + s[n:, n:])
    im = 0.5 * (s[:n, n:] - s[n:, :n])
    return hermitian(re + 1j * im, tol=1e-9)


def jacobi_eigh_symmetric(s: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60):
    """Cyclic Jacobi eigensolver for a real symmetric matrix.

    Returns ascending eigenvalues and orthonormal eigenvectors (columns).
    """
    a = np.array(s, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v
    for _ in range(max_sweeps):
        off = math.sqrt(2.0) * np.linalg.norm(np.triu(a, 1))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300 or abs(apq) < 1e-18 * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - sn * aq
                a[q, :] = sn * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        off = math.sqrt(2.0) * np.linalg.norm(np.triu(a, 1))
        if off > 1e-10 * scale:
            raise ConvergenceError(off / scale)
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]


def _jacobi_hermitian(a: np.ndarray):
    n = a.shape[0]
    w2, v2 = jacobi_eigh_symmetric(real_embed(a))
    # Each eigenvalue of A appears twice; [p; q] pairs with p - i q.
    vecs = v2[:n, :] - 1j * v2[n:, :]
    scale = max(1.0, float(np.max(np.abs(w2))))
    values, columns = [], []
    i = 0
    while i < 2 * n:
        j = i + 1
        while j < 2 * n and w2[j] - w2[i] <= 1e-9 * scale:
            j += 1
        k = (j - i) // 2
        u, sv, _ = np.linalg.svd(vecs[:, i:j], full_matrices=False)
        columns.append(u[:, :k])
        values.extend([float(np.mean(w2[i:j]))] * k)
        i = j
    u = np.concatenate(columns, axis=1)
    # Re-orthonormalize inside clusters and refine values by Rayleigh quotients.
    u, _ = np.linalg.qr(u)
    values = np.real(np.einsum("ij,ij->j", u.conj(), a @ u))
    return values, u


def eigh(a, method: str = "lapack"):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    ``method="jacobi"`` runs cyclic Jacobi on the real embedding and merges
    the paired eigenvalues; ``"lapack"`` uses ``numpy.linalg.eigh``.
    """
    a = hermitian(a)
    if method == "lapack":
        w, u = np.linalg.eigh(a)
    elif method == "jacobi":
        w, u = _jacobi_hermitian(a)
        order = np.argsort(w)
        w, u = w[order], u[:, order]
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return w[::-1].copy(), u[:, ::-1].copy()


def numeric_rank(a, tol: float = RANK_TOL) -> int:
    """Number of eigenvalues above ``tol * max(1, lambda_max)``."""
    w = np.linalg.eigvalsh(hermitian(a))
    return int(np.sum(w > tol * max(1.0, float(w[-1]))))


def lambda_min(a) -> float:
    return float(np.linalg.eigvalsh(hermitian(a, tol=1e-9))[0])


def group_rotate(z, alpha) -> np.ndarray:
    """Hadamard action ``(alpha alpha*) o Z``."""
    z = hermitian(z)
    alpha = phase_vector(alpha)
    if alpha.size != z.shape[0]:
        raise ValueError(f"dimension mismatch: Z is {z.shape[0]}, alpha is {alpha.size}")
    return hermitian(np.outer(alpha, alpha.conj()) * z)


def psd_factor(a, tol: float = 1e-8) -> np.ndarray:
    """Return ``V`` with ``V* V ~= A`` and ``numeric_rank(A, tol)`` rows."""
    a = hermitian(a)
    w, u = np.linalg.eigh(a)
    if w[0] < -tol:
        raise NotPSDError(float(w[0]))
    w = np.clip(w, 0.0, None)
    keep = w > tol * max(1.0, float(w[-1]))
    if not np.any(keep):
        return np.zeros((0, a.shape[0]), dtype=complex)
    return (np.sqrt(w[keep])[:, None] * u[:, keep].conj().T)


def rank_one(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex).ravel()
    return np.outer(x, x.conj())


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"n": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(data: dict) -> np.ndarray:
    n = int(data["n"])
    re = np.array(data["re"], dtype=float)
    im = np.array(data.get("im", np.zeros((n, n))), dtype=float)
    if re.shape != (n, n) or im.shape != (n, n):
        raise ValueError(f"matrix JSON shape mismatch for n={n}")
    return re + 1j * im


def save_matrix(path, a) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(a)))


def load_matrix(path) -> np.ndarray:
    return matrix_from_json(json.loads(Path(path).read_text()))
