"""Dense vector/matrix primitives: orthonormal bases, projections, symmetric eigen.

Orthonormal bases are plain float64 arrays of shape (k, d) whose rows are
the basis vectors; an empty basis is a (0, d) array.
"""

import numpy as np

GS_DROP_TOL = 1e-10  # residual norm below which an input vector is dropped
ORTHO_TOL = 1e-8  # pairwise-dot / unit-norm tolerance for basis checks


def as_vector(x, d=None):
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    if d is not None and v.shape[0] != d:
        raise ValueError(f"expected dimension {d}, got {v.shape[0]}")
    return v


def empty_basis(d):
    return np.zeros((0, d))


def is_orthonormal(basis, tol=ORTHO_TOL):
    basis = np.asarray(basis, dtype=np.float64)
    if basis.shape[0] == 0:
        return True
    G = basis @ basis.T
    return bool(np.max(np.abs(G - np.eye(basis.shape[0]))) <= tol)


def gram_schmidt(vectors, drop_tol=GS_DROP_TOL):
    """Orthonormal basis of the span of ``vectors``; near-dependent inputs dropped.

    Uses modified Gram-Schmidt with a second orthogonalization pass for
    numerical stability.  Empty input yields an empty basis.
    """
    vecs = [as_vector(v) for v in vectors]
    if not vecs:
        return np.zeros((0, 0))
    d = vecs[0].shape[0]
    rows = []
    for v in vecs:
        if v.shape[0] != d:
            raise ValueError("inconsistent ambient dimension")
        w = v.copy()
        for u in rows:
            w -= np.dot(u, w) * u
        for u in rows:
            w -= np.dot(u, w) * u
        nw = np.linalg.norm(w)
        if nw >= drop_tol:
            rows.append(w / nw)
    if not rows:
        return empty_basis(d)
    return np.array(rows)


def complement_basis(S, d):
    """Orthonormal basis of the orthogonal complement of span(S) in R^d.

    ``|S| + |result| == d``; returns an empty basis when S is already full.
    Deterministic: seeds the sweep with coordinate vectors.
    """
    S = np.asarray(S, dtype=np.float64).reshape(-1, d)
    k = S.shape[0]
    if k > d:
        raise ValueError("basis larger than ambient dimension")
    rows = []
    for i in range(d):
        w = np.zeros(d)
        w[i] = 1.0
        for u in S:
            w -= np.dot(u, w) * u
        for u in rows:
            w -= np.dot(u, w) * u
        # second pass against everything
        for u in S:
            w -= np.dot(u, w) * u
        for u in rows:
            w -= np.dot(u, w) * u
        nw = np.linalg.norm(w)
        if nw >= 1e-8:
            rows.append(w / nw)
        if len(rows) == d - k:
            break
    if len(rows) != d - k:
        raise ValueError("failed to complete basis; input not orthonormal?")
    if not rows:
        return empty_basis(d)
    return np.array(rows)


def project_point(x, L):
    """Orthogonal projection of x onto span(L): sum_i l_i (l_i . x)."""
    x = as_vector(x)
    L = np.asarray(L, dtype=np.float64).reshape(-1, x.shape[0])
    if L.shape[0] == 0:
        return np.zeros_like(x)
    return L.T @ (L @ x)


def symmetric_eigen(M, sym_tol=1e-10, max_sweeps=100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns).  Dimensions
    here stay small (<= ~32), where Jacobi's simplicity and determinism are
    worth more than LAPACK's asymptotics.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if M.shape[0] and np.max(np.abs(M - M.T)) > sym_tol:
        raise ValueError("matrix not symmetric within tolerance")
    n = M.shape[0]
    A = 0.5 * (M + M.T)
    V = np.eye(n)
    if n <= 1:
        return A.diagonal().copy(), V
    scale = max(1.0, float(np.max(np.abs(A))))
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(A[p, q]))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = A[:, p].copy()
                rot_q = A[:, q].copy()
                A[:, p] = c * rot_p - s * rot_q
                A[:, q] = s * rot_p + c * rot_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = A.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


class AffineMap:
    """Invertible affine transform x -> matrix @ x + offset."""

    def __init__(self, matrix, offset, cond_limit=1e12):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.offset = np.asarray(offset, dtype=np.float64)
        d = self.offset.shape[0]
        if self.matrix.shape != (d, d):
            raise ValueError("matrix/offset dimension mismatch")
        cond = np.linalg.cond(self.matrix)
        if not np.isfinite(cond) or cond > cond_limit:
            raise ValueError(f"matrix condition estimate {cond:.3e} exceeds {cond_limit:.0e}")
        self.matrix_inv = np.linalg.inv(self.matrix)

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d), np.zeros(d))

    @property
    def d(self):
        return self.offset.shape[0]

    def apply(self, x):
        return self.matrix @ np.asarray(x, dtype=np.float64) + self.offset

    def apply_many(self, X):
        return np.asarray(X, dtype=np.float64) @ self.matrix.T + self.offset

    def invert(self, y):
        return self.matrix_inv @ (np.asarray(y, dtype=np.float64) - self.offset)
