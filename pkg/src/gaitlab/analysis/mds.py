"""Classical multidimensional scaling with a Jacobi eigensolver."""

from __future__ import annotations

import warnings

import numpy as np


def jacobi_eigh(a: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) sorted descending. Small and
    deterministic; accuracy checked against LAPACK in the tests.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < tol * 1e-3:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / a[p, q]
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])  # A <- J^T A J annihilates a_pq
                idx = [p, q]
                a[idx, :] = rot.T @ a[idx, :]
                a[:, idx] = a[:, idx] @ rot
                v[:, idx] = v[:, idx] @ rot
    vals = np.diag(a).copy()
    order = np.argsort(vals)[::-1]
    return vals[order], v[:, order]


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    sq = np.sum(p * p, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * p @ p.T
    np.fill_diagonal(d2, 0.0)
    d = np.sqrt(np.maximum(d2, 0.0))
    return (d + d.T) / 2.0


def classical_mds(data: np.ndarray, out_dim: int = 2,
                  is_distance: bool | None = None) -> tuple[np.ndarray, float]:
    """Embed points (or a distance matrix) into ``out_dim`` coordinates.

    Double-centers the squared distances, takes the top eigenpairs of the
    Gram matrix via Jacobi, and scales eigenvectors by sqrt(eigenvalue).
    Returns (embedding, stress) where stress is the relative residual of the
    reconstructed distances.
    """
    data = np.asarray(data, dtype=float)
    if is_distance is None:
        is_distance = data.ndim == 2 and data.shape[0] == data.shape[1] and \
            np.allclose(np.diag(data), 0.0) and np.allclose(data, data.T)
    d = data if is_distance else pairwise_distances(data)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if not np.allclose(d, d.T, atol=1e-9):
        raise ValueError("distance matrix must be symmetric")
    if np.any(d < -1e-12):
        raise ValueError("distances must be nonnegative")
    if np.max(np.abs(np.diag(d))) > 1e-9:
        raise ValueError("distance matrix must have a zero diagonal")

    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * j @ (d * d) @ j
    vals, vecs = jacobi_eigh(b)
    pos = vals > 1e-12
    n_pos = int(np.sum(pos[:out_dim]))
    if n_pos < out_dim:
        warnings.warn(
            f"only {n_pos} positive eigenvalues available for a {out_dim}-D embedding",
            stacklevel=2,
        )
    emb = np.zeros((n, out_dim))
    for k in range(min(out_dim, n)):
        if vals[k] > 1e-12:
            emb[:, k] = vecs[:, k] * np.sqrt(vals[k])
    rec = pairwise_distances(emb)
    denom = np.sqrt(np.sum(d * d))
    stress = float(np.sqrt(np.sum((d - rec) ** 2)) / denom) if denom > 0 else 0.0
    return emb, stress
