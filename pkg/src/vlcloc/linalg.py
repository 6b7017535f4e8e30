import numpy as np

RANK_RTOL = 1e-10


def pinv_with_rank(a: np.ndarray, rtol: float = RANK_RTOL):
    """Moore-Penrose pseudoinverse via SVD, plus the numerical rank.

    Singular values below ``rtol * s_max`` are treated as zero.
    """
    a = np.asarray(a, dtype=float)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(a.T.shape), 0
    keep = s > rtol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.T * inv_s) @ u.T, int(keep.sum())
