"""The projected-volume learner.

State is a knowledge polytope K plus an orthonormal set S of certified-thin
directions (LP width <= delta at insertion) and the cached complement basis
L of the remaining "large" subspace.  Predictions cut through the centroid
of the cylindrified body Cyl(K, S): the projection of K onto L, extruded
over a box spanning the [min, max] support interval of each thin direction.
The centroid of that cylinder is the centroid of the projection lifted by
the interval midpoints, so the sampler walks the projection itself, using
LP chords (see :func:`subspace_chord`).
"""

from dataclasses import dataclass

import numpy as np

from . import lp
from .geometry import as_vector, complement_basis, empty_basis, is_orthonormal
from .geometry import symmetric_eigen
from .kernels import subspace_walk
from .polytope import Polytope
from .rng import RngState
from .sampling import (
    SamplerConfig,
    default_config,
    repair_into_body,
    rounding_transform,
    sample_uniform,
)

MEMBERSHIP_TOL = 1e-9


def default_delta(d, epsilon):
    """Practical thin-direction threshold: d * delta <= epsilon / 2."""
    return epsilon / (2.0 * d)


def analysis_delta(d, epsilon):
    """The threshold the potential-function analysis works at."""
    return epsilon * epsilon / (16.0 * d * (d + 1) ** 2)


def default_rho(d, epsilon):
    """Centroid accuracy target matching the approximate projected cut bound."""
    return epsilon / (8.0 * (d + 1) ** 2)


def appendix_rho(d, epsilon):
    d_appx = epsilon * epsilon / (16.0 * d**1.5 * (d + 1) ** 3)
    return d_appx * d_appx / (2.0 * (d + 1))


@dataclass(frozen=True)
class Prediction:
    x: float  # guess for u . theta
    z: np.ndarray  # cut point (cylindrified centroid estimate)
    n_t_flag: bool  # width of Cyl(K, S) along u exceeds epsilon


@dataclass(frozen=True)
class KnowledgeState:
    K: Polytope
    S: np.ndarray  # (n_s, d) orthonormal thin directions
    L: np.ndarray  # (d - n_s, d) complement basis, cached
    delta: float
    widths_S: np.ndarray  # (n_s, 2) [min, max] support of K along each s

    @property
    def d(self):
        return self.K.d

    @property
    def n_small(self):
        return self.S.shape[0]

    @property
    def dim_large(self):
        return self.L.shape[0]

    def validate(self, tol=1e-8):
        full = np.vstack([self.S, self.L]) if self.n_small else self.L
        if not is_orthonormal(full, tol):
            raise ValueError("S u L fails the orthonormal-basis check")
        if self.widths_S.shape != (self.n_small, 2):
            raise ValueError("widths_S shape mismatch")
        spans = self.widths_S[:, 1] - self.widths_S[:, 0]
        if np.any(spans > self.delta + 1e-9) or np.any(spans < -1e-9):
            raise ValueError("widths_S spans violate the delta bound")


def initial_state(K, delta):
    d = K.d
    return KnowledgeState(
        K=K,
        S=empty_basis(d),
        L=complement_basis(empty_basis(d), d),
        delta=float(delta),
        widths_S=np.zeros((0, 2)),
    )


def _support_interval(K, v):
    """(min, max) of v . x over K."""
    hi = K.support(v)
    lo = -K.support(-np.asarray(v, dtype=np.float64))
    return lo, hi


def subspace_chord(K, S, p, u_L):
    """Chord of the projection of K onto L through p along unit u_L in L.

    Solves two LPs over (t, y): feasibility of p + t*u_L + S^T y in K.  p
    must already lie in the projection (certified by a fiber feasibility
    solve); u_L must be orthogonal to every row of S.  With empty S this is
    the plain ratio-test chord.
    """
    S = np.asarray(S, dtype=np.float64).reshape(-1, K.d)
    p = as_vector(p, K.d)
    u_L = as_vector(u_L, K.d)
    if S.shape[0] == 0:
        return K.chord(p, u_L)
    A_S = K.A @ S.T
    r = K.b - K.A @ p
    y0, slack = lp.fiber_center(A_S, r)
    if slack < -MEMBERSHIP_TOL:
        raise ValueError("base point not in the projection (fiber infeasible)")
    m = K.m
    q = S.shape[0]
    W = np.empty((m, 1 + q))
    W[:, 0] = K.A @ u_L
    W[:, 1:] = A_S
    z0 = np.concatenate([[0.0], y0])
    c = np.zeros(1 + q)
    c[0] = 1.0
    hi = lp.slide_maximize(W, r, c, z0)
    lo = lp.slide_maximize(W, r, -c, z0)
    if hi.status != "optimal" or lo.status != "optimal":
        raise lp.LpError("projection chord LP failed")
    t_hi = float(hi.x[0])
    t_lo = float(lo.x[0])
    return min(t_lo, 0.0), max(t_hi, 0.0)


def _cov_config(k):
    """Small walk budget for thin-direction covariance probes."""
    return SamplerConfig(
        burn_in=25 * k * k + 25,
        thinning=max(1, k // 2),
        n_samples=max(64, 16 * k),
        rounding=False,
    )


def _project_walk(state, cfg, rng, transform=None, warm=None):
    """Hit-and-run over the projection of K onto L, in L-coordinates.

    Returns (samples (n, k), stats).  warm may be an ambient interior point
    of K; defaults to the Chebyshev center.
    """
    K, S, L = state.K, state.S, state.L
    k = L.shape[0]
    q = S.shape[0]
    if q == 0:
        raise ValueError("use sampling.sample_uniform when S is empty")
    x0 = K.interior_point() if warm is None else as_vector(warm, K.d)
    p0 = L @ x0
    y0 = S @ x0
    A_L = np.ascontiguousarray(K.A @ L.T)
    A_S = np.ascontiguousarray(K.A @ S.T)
    t_inv = np.eye(k) if transform is None else np.ascontiguousarray(transform.matrix_inv)
    total = cfg.burn_in + cfg.thinning * cfg.n_samples
    normals = rng.standard_normal((total, k))
    unifs = rng.random(total)
    samples, n_deg, n_fail, p_last, y_last = subspace_walk(
        A_L, A_S, K.b, p0, y0, t_inv, normals, unifs,
        cfg.burn_in, cfg.thinning, cfg.n_samples, 1e-10, 60 * (K.m + q + 1) + 200,
    )
    stats = {
        "degenerate_chords": int(n_deg),
        "lp_failures": int(n_fail),
        "last_p": p_last,
        "last_y": y_last,
    }
    return samples, stats


def _projection_membership_slack(K, S, p):
    """Max fiber slack of p against the projection of K onto span(S)-complement."""
    S = np.asarray(S, dtype=np.float64).reshape(-1, K.d)
    r = K.b - K.A @ as_vector(p, K.d)
    if S.shape[0] == 0:
        return float(np.min(r))
    _, slack = lp.fiber_center(K.A @ S.T, r)
    return float(slack)


def cylindrified_centroid(state, cfg, rng, transform=None, warm=None, return_info=False):
    """Centroid estimate of Cyl(K, S): lifted projection centroid plus box midpoints.

    With empty S this is the plain body centroid estimate.  A 1-dimensional
    large subspace is special-cased: the projection is an interval whose
    centroid is its exact midpoint (two support LPs, no walk).
    """
    K, S, L = state.K, state.S, state.L
    k = L.shape[0]
    mids = state.widths_S.mean(axis=1) if state.n_small else np.zeros(0)
    s_part = S.T @ mids if state.n_small else np.zeros(K.d)
    info = {"n": 0, "stderr_bound": 0.0, "samples": None}
    if k == 0:
        z = s_part
    elif state.n_small == 0:
        samples = sample_uniform(K, cfg, rng, warm=warm, transform=transform)
        z = repair_into_body(K, samples.mean(axis=0))
        n = samples.shape[0]
        info["n"] = n
        info["stderr_bound"] = (
            float(np.max(samples.std(axis=0, ddof=1))) / np.sqrt(n) if n > 1 else np.inf
        )
        info["samples"] = samples @ L.T  # L is the coordinate basis here
    elif k == 1:
        ell = L[0]
        lo, hi = _support_interval(K, ell)
        z = ell * (0.5 * (lo + hi)) + s_part
    else:
        samples, stats = _project_walk(state, cfg, rng, transform=transform, warm=warm)
        c_L = samples.mean(axis=0)
        n = samples.shape[0]
        stderr = float(np.max(samples.std(axis=0, ddof=1))) / np.sqrt(n) if n > 1 else np.inf
        p = L.T @ c_L
        if _projection_membership_slack(K, S, p) < MEMBERSHIP_TOL:
            # pull toward the projected Chebyshev center until safely inside
            anchor = L.T @ (L @ K.interior_point())
            for frac in (0.001, 0.01, 0.1, 0.5, 1.0):
                cand = p + frac * (anchor - p)
                if _projection_membership_slack(K, S, cand) >= MEMBERSHIP_TOL:
                    p = cand
                    break
            else:
                p = anchor
        z = L.T @ (L @ p) + s_part
        info["n"] = n
        info["stderr_bound"] = stderr
        info["samples"] = samples
        info["walk_stats"] = stats
    if return_info:
        return z, info
    return z


def cyl_width(state, u):
    """Width of Cyl(K, S) along unit u: projection width plus box contributions."""
    u = as_vector(u, state.d)
    u_L = state.L.T @ (state.L @ u) if state.dim_large else np.zeros(state.d)
    w = 0.0
    if np.linalg.norm(u_L) > 1e-12:
        w += state.K.width_any(u_L)
    if state.n_small:
        spans = state.widths_S[:, 1] - state.widths_S[:, 0]
        w += float(np.abs(state.S @ u) @ spans)
    return w


def predict(state, u, epsilon, cfg, rng, transform=None, warm=None, return_info=False):
    """Prediction x = u . z with z the cylindrified centroid; n_t_flag is telemetry."""
    u = as_vector(u, state.d)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    out = cylindrified_centroid(state, cfg, rng, transform=transform, warm=warm,
                                return_info=return_info)
    z, info = out if return_info else (out, None)
    pred = Prediction(x=float(u @ z), z=z, n_t_flag=bool(cyl_width(state, u) > epsilon))
    if return_info:
        return pred, info
    return pred


def apply_cut(state, u, x, side):
    """Intersect K with the feedback halfspace and refresh widths_S.

    side='below' means the feedback was x <= u . theta, so we keep
    {theta : u . theta >= x}; side='above' keeps {theta : u . theta <= x}.
    Width intervals can only shrink, so stale values are clamped monotonely.
    """
    u = as_vector(u, state.d)
    if side == "below":
        K2 = state.K.add_halfspace(u, x, "ge")
    elif side == "above":
        K2 = state.K.add_halfspace(u, x, "le")
    else:
        raise ValueError(f"side must be 'below' or 'above', got {side!r}")
    widths = state.widths_S.copy()
    for i in range(state.n_small):
        lo, hi = _support_interval(K2, state.S[i])
        widths[i, 0] = max(widths[i, 0], lo)
        widths[i, 1] = min(widths[i, 1], hi)
    return KnowledgeState(K=K2, S=state.S, L=state.L, delta=state.delta, widths_S=widths)


def find_thin_directions(state, rng=None, return_diag=False):
    """Grow S until the smallest-covariance-eigenvalue candidate fails LP certification.

    Each iteration samples the current projection, lifts the eigenvector of
    the smallest covariance eigenvalue, re-orthogonalizes it against S, and
    appends it only when an LP certifies width(K, v) <= delta.  A
    1-dimensional large subspace skips the walk and tests its basis vector
    directly.  There is no certificate that no thin direction remains; the
    smallest width examined is reported as a diagnostic.
    """
    diag = {"added": 0, "min_candidate_width": np.nan, "last_samples": None}
    K = state.K
    S = state.S
    L = state.L
    widths = state.widths_S

    def normalized_against_s(v):
        v = v.copy()
        for s in S:
            v -= np.dot(s, v) * s
        for s in S:
            v -= np.dot(s, v) * s
        nv = np.linalg.norm(v)
        return None if nv < 1e-10 else v / nv

    while L.shape[0] > 0:
        k = L.shape[0]
        if k == 1:
            candidates = [L[0].copy()]
        else:
            if rng is None:
                raise ValueError("find_thin_directions needs an rng when dim(L) > 1")
            probe_state = KnowledgeState(K=K, S=S, L=L, delta=state.delta, widths_S=widths)
            if S.shape[0] == 0:
                samples_amb = sample_uniform(K, _cov_config(k), rng,
                                             warm=K.interior_point(), transform=None)
                samples = samples_amb @ L.T
            else:
                samples, _ = _project_walk(probe_state, _cov_config(k), rng)
            diag["last_samples"] = samples
            cov = np.cov(samples, rowvar=False, ddof=1).reshape(k, k)
            _, V = symmetric_eigen(0.5 * (cov + cov.T))
            v_eig = L.T @ V[:, 0]
            candidates = [v_eig]
            # Sampling noise rotates the eigen candidate slightly; widths
            # sitting exactly at delta then miss certification.  Thin
            # directions come from accumulated cuts, so the aligned
            # constraint normal is the natural exact candidate.
            dots = np.abs(K.A @ v_eig)
            best = int(np.argmax(dots))
            if dots[best] >= 0.99:
                candidates.append(np.sign(K.A[best] @ v_eig) * K.A[best].copy())
        accepted = False
        for cand in candidates:
            v = normalized_against_s(cand)
            if v is None:
                continue
            lo, hi = _support_interval(K, v)
            w = hi - lo
            if not np.isfinite(diag["min_candidate_width"]) or w < diag["min_candidate_width"]:
                diag["min_candidate_width"] = w
            if w <= state.delta:
                S = np.vstack([S, v[None, :]]) if S.shape[0] else v[None, :].copy()
                L = complement_basis(S, K.d)
                widths = (np.vstack([widths, [[lo, hi]]]) if widths.shape[0]
                          else np.array([[lo, hi]]))
                diag["added"] += 1
                accepted = True
                break
        if not accepted:
            break
    out = KnowledgeState(K=K, S=S, L=L, delta=state.delta, widths_S=widths)
    if return_diag:
        return out, diag
    return out


def update(state, u, x, side, rng=None):
    """Feedback cut followed by thin-direction discovery to fixpoint."""
    return find_thin_directions(apply_cut(state, u, x, side), rng=rng)


def stopping_consistency(state, epsilon=None):
    """True iff the large subspace is zero-dimensional.

    Once true, any prediction error is at most n_small * delta, so with
    delta <= epsilon / d no further mistakes occur (epsilon is accepted for
    signature symmetry; the decision does not depend on it).
    """
    return state.dim_large == 0


def phi_estimate(state, n, rng):
    """MC estimate (value, stderr) of the projection volume vol(Pi_L K).

    Telemetry for the potential-function diagnostics; expensive for
    |S| >= 2 where membership needs a fiber LP per point.
    """
    K, S, L = state.K, state.S, state.L
    k = L.shape[0]
    if k == 0:
        return 0.0, 0.0
    lo = np.empty(k)
    hi = np.empty(k)
    for j in range(k):
        lo[j], hi[j] = _support_interval(K, L[j])
    span = hi - lo
    if np.any(span <= 0):
        return 0.0, 0.0
    box_vol = float(np.prod(span))
    pts = lo + rng.random((n, k)) * span
    amb = pts @ L  # (n, d) lifted points
    q = S.shape[0]
    if q == 0:
        inside = K.contains_many(amb)
    elif q == 1:
        den = K.A @ S[0]
        r = K.b[None, :] - amb @ K.A.T
        pos = den > 1e-13
        neg = den < -1e-13
        zero = ~(pos | neg)
        hi_t = np.full(n, np.inf)
        lo_t = np.full(n, -np.inf)
        if np.any(pos):
            hi_t = np.min(r[:, pos] / den[pos], axis=1)
        if np.any(neg):
            lo_t = np.max(r[:, neg] / den[neg], axis=1)
        inside = lo_t <= hi_t + 1e-12
        if np.any(zero):
            inside &= np.all(r[:, zero] >= -1e-12, axis=1)
    else:
        A_S = K.A @ S.T
        inside = np.zeros(n, dtype=bool)
        for i in range(n):
            _, slack = lp.fiber_center(A_S, K.b - K.A @ amb[i])
            inside[i] = slack >= -1e-12
    hits = int(np.count_nonzero(inside))
    p_hat = hits / n
    stderr = box_vol * float(np.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / n) / n))
    return p_hat * box_vol, stderr


class ProjectedVolumeLearner:
    """Stateful wrapper satisfying the predict/observe learner protocol.

    Owns the rng stream, the sampler budget (with optional adaptive
    doubling against the rho accuracy target), the rounding transform for
    the projection walk, and the prune schedule.
    """

    def __init__(self, body, epsilon, delta=None, rho=None, sampler=None,
                 rng=None, adapt_samples=False, sample_cap_factor=64,
                 prune_every=50, rounding_every=25):
        d = body.d
        self.epsilon = float(epsilon)
        self.delta = float(delta) if delta is not None else default_delta(d, epsilon)
        self.rho = float(rho) if rho is not None else default_rho(d, epsilon)
        self.sampler = sampler if sampler is not None else default_config(d)
        if rng is None:
            rng = RngState(0).split(7)
        self._gen = rng.generator() if isinstance(rng, RngState) else rng
        self.adapt_samples = bool(adapt_samples)
        self.sample_cap_factor = int(sample_cap_factor)
        self.prune_every = int(prune_every)
        self.rounding_every = int(rounding_every)
        self.state = initial_state(body, self.delta)
        self._transform = None  # rounding map in current L coordinates
        self._cuts_since_prune = 0
        self._cuts_since_round = 0
        self._min_cert_width = np.nan
        self._last_samples = None

    # -- protocol ---------------------------------------------------------
    @property
    def knowledge_set(self):
        return self.state.K

    @property
    def n_small(self):
        return self.state.n_small

    @property
    def min_certified_width(self):
        return self._min_cert_width

    @property
    def converged(self):
        return stopping_consistency(self.state)

    def predict(self, u):
        cfg = self.sampler
        pred, info = predict(self.state, u, self.epsilon, cfg, self._gen,
                             transform=self._usable_transform(), return_info=True)
        if self.adapt_samples:
            cap = cfg.n_samples * self.sample_cap_factor
            while info["stderr_bound"] > self.rho / 3.0 and cfg.n_samples * 2 <= cap:
                cfg = cfg.with_samples(cfg.n_samples * 2)
                pred, info = predict(self.state, u, self.epsilon, cfg, self._gen,
                                     transform=self._usable_transform(), return_info=True)
        if info.get("samples") is not None:
            self._last_samples = info["samples"]
        return pred

    def observe(self, u, x, side):
        prev_dim = self.state.dim_large
        state = apply_cut(self.state, u, x, side)
        self._cuts_since_prune += 1
        self._cuts_since_round += 1
        if self._cuts_since_prune >= self.prune_every:
            state = KnowledgeState(K=state.K.pruned(), S=state.S, L=state.L,
                                   delta=state.delta, widths_S=state.widths_S)
            self._cuts_since_prune = 0
        state, diag = find_thin_directions(state, rng=self._gen, return_diag=True)
        if np.isfinite(diag["min_candidate_width"]):
            w = diag["min_candidate_width"]
            if not np.isfinite(self._min_cert_width) or w < self._min_cert_width:
                self._min_cert_width = w
        self.state = state
        if state.dim_large != prev_dim:
            self._transform = None
            self._cuts_since_round = 0
            self._refresh_transform(diag.get("last_samples"))
        elif self._cuts_since_round >= self.rounding_every:
            self._refresh_transform(self._last_samples)
            self._cuts_since_round = 0

    # -- internals ----------------------------------------------------------
    def _usable_transform(self):
        t = self._transform
        if t is not None and t.d == self.state.dim_large:
            return t
        return None

    def _refresh_transform(self, samples_L):
        k = self.state.dim_large
        if k < 2 or samples_L is None or samples_L.shape[1] != k:
            self._transform = None
            return
        if samples_L.shape[0] < 10 * k:
            self._transform = None
            return
        tmap, degenerate = rounding_transform(samples_L)
        self._transform = None if degenerate else tmap
