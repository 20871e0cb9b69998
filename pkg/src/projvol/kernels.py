"""Hot numeric kernels: chord ratio tests, a dense active-set LP, hit-and-run walks.

Everything here operates on raw float64 arrays describing an H-polytope
``{x : A x <= b}`` with unit-normalized rows of ``A``.  The functions are
written in a numba-compatible numpy subset and compiled through
:func:`projvol._backend.jit_kernel`; with ``PROJVOL_BACKEND=numpy`` the same
code runs uncompiled.

LP solver
---------
``slide_lp`` maximizes ``c @ z`` over ``{z : W z <= r}`` starting from a
*feasible* point.  It slides along the projection of ``c`` onto the null
space of the active constraint normals, collecting blocking rows, and once
the objective is spanned by active normals it checks Lagrange multipliers,
dropping the lowest-index negative one (Bland's least-index rule on both the
entering and leaving constraint prevents cycling).  Callers guarantee a
feasible start; every polytope in this package keeps a Chebyshev-center
witness around for exactly that purpose.
"""

import numpy as np

from ._backend import jit_kernel

LP_OPTIMAL = 0
LP_UNBOUNDED = 1
LP_ITER_LIMIT = 2
LP_STALLED = 3  # degenerate vertex: negative multipliers left but all drop-barred

_DEN_TOL = 1e-13  # direction-denominator threshold in ratio tests
_BLOCK_TOL = 1e-10  # minimum blocking rate in the LP slide, above basis-drift noise
_INDEP_TOL = 1e-12  # residual norm below which a normal is treated as dependent
_MULT_TOL = 1e-9  # multiplier negativity threshold


def _chord_bounds(A, b, x, direction):
    """Range of t with A (x + t*direction) <= b; x must satisfy A x <= b (+tiny slack).

    Returns (t_lo, t_hi) with t_lo <= 0 <= t_hi.  Unbounded sides come back
    as +-1e300; bounded polytopes never produce them.
    """
    m = A.shape[0]
    t_lo = -1e300
    t_hi = 1e300
    for i in range(m):
        den = np.dot(A[i], direction)
        s = b[i] - np.dot(A[i], x)
        if s < 0.0:
            s = 0.0
        if den > _DEN_TOL:
            t = s / den
            if t < t_hi:
                t_hi = t
        elif den < -_DEN_TOL:
            t = s / den
            if t > t_lo:
                t_lo = t
    return t_lo, t_hi


chord_bounds = jit_kernel(_chord_bounds)


def _slide_lp(W, r, c, z0, max_iter):
    """Maximize c @ z over {z : W z <= r} from the feasible point z0.

    Returns (status, z, iterations).  status is LP_OPTIMAL, LP_UNBOUNDED or
    LP_ITER_LIMIT; on LP_OPTIMAL z is an optimal point (a vertex unless the
    optimum is attained on a face, in which case the deterministic pivot
    order picks one point of it).
    """
    m, n = W.shape
    z = z0.copy()
    act = np.empty(n, dtype=np.int64)
    Q = np.zeros((n, n))
    k = 0
    # Rows excluded from ray shoots: active rows (their normal is orthogonal
    # to the slide direction by construction, but roundoff can leave a
    # just-above-threshold denominator and stall at alpha = 0) and rows found
    # numerically dependent on the active span.  Cleared when a drop shrinks
    # the span.
    skip = np.zeros(m, dtype=np.bool_)
    # Rows whose drop led straight back into them at a zero-length step: the
    # multiplier signs at a near-dependent active cluster are unreliable, so
    # such rows are barred from dropping until the point actually moves.
    no_drop = np.zeros(m, dtype=np.bool_)
    last_drop = -1
    cnorm = np.sqrt(np.dot(c, c))
    tol_dir = 1e-11 * (1.0 + cnorm)

    for it in range(max_iter):
        # Project objective onto the null space of active normals.
        d_vec = c.copy()
        for j in range(k):
            d_vec = d_vec - np.dot(Q[j], d_vec) * Q[j]
        nd = np.sqrt(np.dot(d_vec, d_vec))

        if nd > tol_dir:
            d_vec = d_vec / nd
            Wd = W @ d_vec
            Wz = W @ z
            alpha = 1e300
            blk = -1
            for i in range(m):
                # rates below _BLOCK_TOL are indistinguishable from the
                # orthogonality drift of the active basis; treating them as
                # blockers pollutes the basis with noise directions
                if not skip[i] and Wd[i] > _BLOCK_TOL:
                    s = r[i] - Wz[i]
                    if s < 0.0:
                        s = 0.0
                    t = s / Wd[i]
                    if t < alpha - 1e-12 * (1.0 + alpha):
                        alpha = t
                        blk = i
            if blk < 0:
                return LP_UNBOUNDED, z, it
            z = z + alpha * d_vec
            if alpha > 1e-12:
                for i in range(m):
                    no_drop[i] = False
                last_drop = -1
            elif blk == last_drop:
                no_drop[blk] = True
            # A blocking row always joins the active set: on sliver-shaped
            # active clusters a row can sit near the active span yet carry a
            # real blocking rate (its in-span representation has huge
            # coefficients), so rejecting it as dependent would let the slide
            # walk straight through it.  The rate lower-bounds the residual
            # norm (rate = w . d with d unit and orthogonal to the basis),
            # so the normalization below never amplifies pure noise.
            w = W[blk].copy()
            for j in range(k):
                w = w - np.dot(Q[j], w) * Q[j]
            for j in range(k):
                w = w - np.dot(Q[j], w) * Q[j]
            nw = np.sqrt(np.dot(w, w))
            skip[blk] = True
            if k < n and nw > 1e-11:
                Q[k] = w / nw
                act[k] = blk
                k += 1
        else:
            if k == 0:
                return LP_OPTIMAL, z, it
            # Multipliers solving A_act^T lam ~= c by SVD least squares:
            # minimal residual and stable on near-dependent active sets,
            # where normal equations would need a distorting ridge.
            At = np.empty((n, k))
            for j in range(k):
                At[:, j] = W[act[j]]
            lam, _, _, _ = np.linalg.lstsq(At, c)
            drop = -1
            drop_row = np.int64(1) << np.int64(60)
            any_negative = False
            for j in range(k):
                if lam[j] < -_MULT_TOL:
                    any_negative = True
                    if not no_drop[act[j]] and act[j] < drop_row:
                        drop_row = act[j]
                        drop = j
            if drop < 0:
                if any_negative:
                    # cannot certify optimality: the caller reperturbs
                    return LP_STALLED, z, it
                # certificate must actually represent c, else the basis
                # degenerated and only a perturbed retry can be trusted
                resid = -c
                for j in range(k):
                    resid = resid + lam[j] * W[act[j]]
                if np.sqrt(np.dot(resid, resid)) > 1e-7 * (1.0 + cnorm):
                    return LP_STALLED, z, it
                return LP_OPTIMAL, z, it
            last_drop = act[drop]
            for j in range(drop, k - 1):
                act[j] = act[j + 1]
            k -= 1
            kk = 0
            for j in range(k):
                w = W[act[j]].copy()
                for j2 in range(kk):
                    w = w - np.dot(Q[j2], w) * Q[j2]
                for j2 in range(kk):
                    w = w - np.dot(Q[j2], w) * Q[j2]
                nw = np.sqrt(np.dot(w, w))
                if nw > 1e-300:
                    Q[kk] = w / nw
                    act[kk] = act[j]
                    kk += 1
            k = kk
            # span shrank: dependency marks are stale
            for i in range(m):
                skip[i] = False
            for j in range(k):
                skip[act[j]] = True
    return LP_ITER_LIMIT, z, max_iter


slide_lp = jit_kernel(_slide_lp)


def _ambient_walk(A, b, x0, t_inv, normals, unifs, burn_in, thinning, n_samples):
    """Hit-and-run over {A x <= b} with ratio-test chords.

    Directions are drawn as t_inv @ g with g the pre-generated standard
    normals (t_inv is the inverse rounding map, identity when rounding is
    off).  Returns (samples, n_degenerate, x_final); degenerate chords leave
    the point unchanged and bump the counter.
    """
    d = x0.shape[0]
    x = x0.copy()
    out = np.empty((n_samples, d))
    n_deg = 0
    total = burn_in + thinning * n_samples
    idx = 0
    for step in range(total):
        g = normals[step]
        dirv = t_inv @ g
        nn = np.sqrt(np.dot(dirv, dirv))
        if nn < 1e-300:
            n_deg += 1
        else:
            dirv = dirv / nn
            t_lo, t_hi = chord_bounds(A, b, x, dirv)
            if t_hi - t_lo < 1e-14 or t_hi > 1e299 or t_lo < -1e299:
                n_deg += 1
            else:
                t = t_lo + unifs[step] * (t_hi - t_lo)
                x = x + t * dirv
        if step >= burn_in and (step - burn_in + 1) % thinning == 0:
            out[idx] = x
            idx += 1
            if idx == n_samples:
                break
    return out, n_deg, x


ambient_walk = jit_kernel(_ambient_walk)


def _subspace_walk(
    A_L,
    A_S,
    b,
    p0,
    y0,
    t_inv,
    normals,
    unifs,
    burn_in,
    thinning,
    n_samples,
    slack_floor,
    max_lp_iter,
):
    """Hit-and-run over the projection of {A x <= b} onto a subspace.

    Points live in the coordinates of an orthonormal basis L of the large
    subspace: p is feasible iff some fiber point exists, i.e. exists y with
    A_L p + A_S y <= b where A_L = A @ L.T and A_S = A @ S.T.  Each chord of
    the projection is found by two small LPs over (t, y); the walk carries a
    feasible fiber witness y, updated by interpolating toward the chord-LP
    vertex and recentered in the fiber when its slack decays.

    Returns (samples, n_degenerate, n_lp_fail, p_final, y_final).
    """
    m = A_L.shape[0]
    k = p0.shape[0]
    q = y0.shape[0]
    p = p0.copy()
    y = y0.copy()
    out = np.empty((n_samples, k))
    n_deg = 0
    n_fail = 0

    W = np.empty((m, 1 + q))
    for i in range(m):
        for j in range(q):
            W[i, 1 + j] = A_S[i, j]
    W2 = np.empty((m, q + 1))
    for i in range(m):
        for j in range(q):
            W2[i, j] = A_S[i, j]
        W2[i, q] = 1.0

    c_max = np.zeros(1 + q)
    c_max[0] = 1.0
    c_min = np.zeros(1 + q)
    c_min[0] = -1.0
    c_re = np.zeros(q + 1)
    c_re[q] = 1.0

    r = b - A_L @ p
    total = burn_in + thinning * n_samples
    idx = 0
    for step in range(total):
        g = normals[step]
        dirv = t_inv @ g
        nn = np.sqrt(np.dot(dirv, dirv))
        if nn >= 1e-300:
            dirv = dirv / nn
            col = A_L @ dirv
            for i in range(m):
                W[i, 0] = col[i]
            z0 = np.empty(1 + q)
            z0[0] = 0.0
            for j in range(q):
                z0[1 + j] = y[j]
            st_hi, z_hi, _ = slide_lp(W, r, c_max, z0, max_lp_iter)
            st_lo, z_lo, _ = slide_lp(W, r, c_min, z0, max_lp_iter)
            if st_hi != LP_OPTIMAL or st_lo != LP_OPTIMAL:
                n_fail += 1
            else:
                t_hi = z_hi[0]
                t_lo = z_lo[0]
                if t_hi - t_lo < 1e-14:
                    n_deg += 1
                else:
                    t = t_lo + unifs[step] * (t_hi - t_lo)
                    if t > 0.0 and t_hi > 0.0:
                        frac = t / t_hi
                        for j in range(q):
                            y[j] = y[j] + frac * (z_hi[1 + j] - y[j])
                    elif t < 0.0 and t_lo < 0.0:
                        frac = t / t_lo
                        for j in range(q):
                            y[j] = y[j] + frac * (z_lo[1 + j] - y[j])
                    p = p + t * dirv
                    r = b - A_L @ p
        # Recenter the fiber witness when its slack gets thin.
        smin = 1e300
        for i in range(m):
            s = r[i] - np.dot(A_S[i], y)
            if s < smin:
                smin = s
        if smin < slack_floor:
            z0c = np.empty(q + 1)
            for j in range(q):
                z0c[j] = y[j]
            z0c[q] = smin - 1e-15
            st_re, z_re, _ = slide_lp(W2, r, c_re, z0c, max_lp_iter)
            if st_re == LP_OPTIMAL and z_re[q] > smin:
                for j in range(q):
                    y[j] = z_re[j]
        if step >= burn_in and (step - burn_in + 1) % thinning == 0:
            out[idx] = p
            idx += 1
            if idx == n_samples:
                break
    return out, n_deg, n_fail, p, y


subspace_walk = jit_kernel(_subspace_walk)


def _fiber_interval(A_S1, r):
    """Feasible interval of {y : A_S1 * y <= r} for a single thin direction.

    A_S1 is the m-vector A @ s.  Returns (lo, hi); empty intervals come back
    with lo > hi.
    """
    m = A_S1.shape[0]
    lo = -1e300
    hi = 1e300
    for i in range(m):
        den = A_S1[i]
        if den > _DEN_TOL:
            t = r[i] / den
            if t < hi:
                hi = t
        elif den < -_DEN_TOL:
            t = r[i] / den
            if t > lo:
                lo = t
        else:
            if r[i] < 0.0:
                return 1.0, -1.0
    return lo, hi


fiber_interval = jit_kernel(_fiber_interval)
