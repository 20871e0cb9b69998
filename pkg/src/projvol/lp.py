"""LP layer over the slide kernel: Chebyshev centers, supports, general maximize.

All problems are posed over H-polytopes {x : A x <= b} with unit rows.  The
slide solver needs a feasible start; the Chebyshev LP manufactures its own
(drop the radius low enough and any x is feasible), and every other solve
starts from a known interior point, normally a cached Chebyshev center.

A rare cycling guard retries once with a deterministic row-indexed
perturbation of b (1e-11 scale, far below the 1e-8 value tolerances).
"""

from dataclasses import dataclass

import numpy as np

from .kernels import LP_ITER_LIMIT, LP_OPTIMAL, LP_STALLED, LP_UNBOUNDED, slide_lp


class LpError(RuntimeError):
    pass


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray
    value: float


def _max_iter(m, n):
    return 60 * (m + n) + 200


def _perturbed(b, scale):
    idx = np.arange(b.shape[0], dtype=np.uint64)
    mix = (idx * np.uint64(2654435761)) % np.uint64(1000)
    return b + scale * (1.0 + np.abs(b)) * (0.5 + mix.astype(np.float64) / 1000.0)


def slide_maximize(W, r, c, z0):
    """Maximize c @ z over {W z <= r} from feasible z0; raises on failure.

    Degenerate vertices can stall the pivot rule; retries perturb r by a
    deterministic row-indexed pattern (1e-11 then 1e-9 scale, far below the
    1e-8 value tolerances) which removes the degeneracy.
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    z0 = np.ascontiguousarray(z0, dtype=np.float64)
    status, z, _ = slide_lp(W, r, c, z0, _max_iter(*W.shape))
    for scale in (1e-11, 1e-9):
        if status not in (LP_ITER_LIMIT, LP_STALLED):
            break
        status, z, _ = slide_lp(W, _perturbed(r, scale), c, z0, _max_iter(*W.shape))
    if status in (LP_ITER_LIMIT, LP_STALLED):
        raise LpError("LP stalled/cycled despite perturbation retries")
    if status == LP_UNBOUNDED:
        return LpResult("unbounded", z, np.inf)
    return LpResult("optimal", z, float(c @ z))


def chebyshev_lp(A, b):
    """Center and radius of the largest inscribed ball of {A x <= b}.

    One LP in (x, r): maximize r s.t. A x + r <= b (rows are unit-norm, so
    r is a true geometric distance).  The radius is allowed to go negative,
    which doubles as an emptiness certificate: radius <= 0 means no interior.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    m, d = A.shape
    W = np.empty((m, d + 1))
    W[:, :d] = A
    W[:, d] = 1.0
    c = np.zeros(d + 1)
    c[d] = 1.0
    z0 = np.zeros(d + 1)
    z0[d] = float(np.min(b)) - 1.0  # feasible for any b: A@0 + r <= b
    res = slide_maximize(W, b, c, z0)
    if res.status == "unbounded":
        raise LpError("Chebyshev LP unbounded: polytope has no bounded inscribed ball")
    return res.x[:d].copy(), float(res.x[d])


def maximize_over(A, b, c, interior):
    """Maximize c @ x over {A x <= b} starting from an interior point."""
    res = slide_maximize(A, b, c, interior)
    if res.status == "unbounded":
        return LpResult("unbounded", res.x, np.inf)
    return res


def fiber_center(A_S, r):
    """Deepest point of the fiber {y : A_S y <= r}: returns (y, slack).

    slack < 0 certifies the fiber (and hence projection membership) is
    infeasible at tolerance |slack|.
    """
    A_S = np.ascontiguousarray(A_S, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    m, q = A_S.shape
    W = np.empty((m, q + 1))
    W[:, :q] = A_S
    W[:, q] = 1.0
    c = np.zeros(q + 1)
    c[q] = 1.0
    z0 = np.zeros(q + 1)
    z0[q] = float(np.min(r)) - 1.0
    res = slide_maximize(W, r, c, z0)
    if res.status == "unbounded":
        # Fiber unbounded in slack only if A_S has a zero row pattern; treat
        # as deeply feasible.
        return res.x[:q].copy(), np.inf
    return res.x[:q].copy(), float(res.x[q])
