"""Cyclic Jacobi eigensolver for small dense real symmetric matrices."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["EigenConvergenceError", "jacobi_eigh"]

OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12


class EigenConvergenceError(ArithmeticError):
    pass


def _off_norm_max(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.max(np.abs(off))) if A.size else 0.0


def jacobi_eigh(
    H: np.ndarray, tol: float = OFFDIAG_TOL, max_sweeps: int = MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition ``H = Q diag(w) Q^T`` by cyclic Jacobi rotations.

    Sweeps over all (p, q) pairs in row order until every off-diagonal entry
    is below ``tol * ||H||_F``.  Returns eigenvalues ascending and the
    matching orthonormal eigenvectors as columns.
    """
    A = np.array(H, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    n = A.shape[0]
    norm = float(np.linalg.norm(A))
    if n and np.max(np.abs(A - A.T)) > SYMMETRY_TOL * max(norm, 1e-300):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    threshold = tol * norm

    for _ in range(max_sweeps):
        if n < 2 or _off_norm_max(A) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0 or abs(apq) < threshold * 1e-3:
                    continue
                h = A[q, q] - A[p, p]
                if abs(h) + 100.0 * abs(apq) == abs(h):
                    # theta^2 would overflow; t ~ 1/(2 theta)
                    t = apq / h
                else:
                    # rotation angle from the classic stable tangent formula
                    theta = h / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp = V[:, p].copy()
                Vq = V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        if _off_norm_max(A) > threshold:
            raise EigenConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]
