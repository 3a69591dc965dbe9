"""Dense symmetric (generalized) eigenproblems.

The generalized problem A v = lam B v is reduced to a standard one with a
Cholesky factor of B.  Two back ends solve the standard problem: LAPACK's
symmetric driver (default) and a cyclic Jacobi rotation method, which is
slower but self-contained and serves as an independent cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import ConvergenceError, DomainError, NotPositiveDefiniteError


@dataclass(frozen=True)
class SymEigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns; B-orthonormal in the generalized case

    def pair(self, i: int):
        return self.eigenvalues[i], self.eigenvectors[:, i]


def cholesky(B) -> np.ndarray:
    """Lower Cholesky factor L with B = L L^T.

    Raises NotPositiveDefiniteError naming the first non-positive pivot.
    """
    B = np.array(B, dtype=float)
    n = B.shape[0]
    L = np.zeros_like(B)
    for j in range(n):
        d = B[j, j] - np.dot(L[j, :j], L[j, :j])
        if not d > 0.0:
            raise NotPositiveDefiniteError(j, float(d))
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (B[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def jacobi_eigh(A, tol: float = 1e-15, max_sweeps: int = 60):
    """Cyclic Jacobi rotations for a symmetric matrix.

    Returns ascending eigenvalues and orthonormal eigenvectors (columns).
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * max(np.linalg.norm(A), 1e-300):
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
                # rotate rows/columns p and q
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError("Jacobi rotations did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def sym_eig(A, B=None, method: str = "lapack") -> SymEigResult:
    """Full ascending spectrum of A (or of the pencil (A, B)).

    ``method`` is 'lapack' or 'jacobi'.  Eigenvectors are orthonormal, or
    B-orthonormal when B is given.  Each eigenvector is signed so that its
    largest-magnitude component is positive (deterministic output).
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("A must be square")
    scale = max(np.max(np.abs(A)), 1e-300)
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise DomainError("A is not symmetric")
    A = 0.5 * (A + A.T)
    if B is not None:
        B = np.array(B, dtype=float)
        if B.shape != A.shape:
            raise DomainError("A and B must have the same shape")
        L = cholesky(0.5 * (B + B.T))
        C = solve_triangular(L, A, lower=True)
        C = solve_triangular(L, C.T, lower=True).T
        C = 0.5 * (C + C.T)
    else:
        C = A
    if method == "lapack":
        w, V = np.linalg.eigh(C)
    elif method == "jacobi":
        w, V = jacobi_eigh(C)
    else:
        raise DomainError(f"unknown method {method!r}")
    if B is not None:
        V = solve_triangular(L.T, V, lower=False)
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return SymEigResult(w, V * signs)
