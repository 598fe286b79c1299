"""Cyclic Jacobi eigendecomposition for small dense symmetric matrices."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EigenFactorization:
    """``H = U diag(Lambda) U^T`` with ascending eigenvalues."""

    U: np.ndarray
    Lambda: np.ndarray

    def reconstruct(self):
        return (self.U * self.Lambda) @ self.U.T


def jacobi_eigh(A, tol=1e-12, max_sweeps=100):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm
    drops below ``tol * ||A||_F``.

    Returns
    -------
    EigenFactorization
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("need a square matrix")
    scale = np.linalg.norm(A)
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * max(scale, 1.0):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    if scale == 0.0:
        return EigenFactorization(V, np.zeros(n))

    def off(M):
        return np.sqrt(np.sum(M[~np.eye(n, dtype=bool)] ** 2))

    for _ in range(max_sweeps):
        if off(A) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    lam = np.diag(A).copy()
    order = np.argsort(lam)
    return EigenFactorization(V[:, order], lam[order])
