"""Small linear-algebra helpers: power iteration for top singular directions."""

from __future__ import annotations

import numpy as np


def top_left_singular(M: np.ndarray, k: int, rtol: float = 1e-10,
                      max_iters: int = 10000, seed: int = 0) -> np.ndarray:
    """Top-k left singular vectors of M by power iteration with deflation.

    Returns a (d, k) orthonormal matrix.  Directions whose singular value is
    numerically zero are filled with arbitrary orthonormal completions.
    """
    d = M.shape[0]
    C = M @ M.T
    rng = np.random.default_rng(seed)
    U = np.zeros((d, k))
    for i in range(k):
        v = rng.standard_normal(d)
        v -= U[:, :i] @ (U[:, :i].T @ v)
        nrm = np.linalg.norm(v)
        v = v / nrm if nrm > 0 else np.eye(d)[:, i % d]
        prev = np.inf
        for _ in range(max_iters):
            w = C @ v
            w -= U[:, :i] @ (U[:, :i].T @ w)  # deflate found directions
            nrm = np.linalg.norm(w)
            if nrm <= 1e-300:
                break
            v = w / nrm
            if abs(nrm - prev) <= rtol * max(nrm, 1.0):
                break
            prev = nrm
        v -= U[:, :i] @ (U[:, :i].T @ v)
        nrm = np.linalg.norm(v)
        if nrm > 0:
            U[:, i] = v / nrm
        else:
            # exhausted the range of M; complete with any orthonormal direction
            for e in np.eye(d).T:
                r = e - U[:, :i] @ (U[:, :i].T @ e)
                if np.linalg.norm(r) > 1e-8:
                    U[:, i] = r / np.linalg.norm(r)
                    break
    return U
