"""Environments that drive learners: fixed-theta flavors and adaptive adversaries.

Fixed-theta environments hold theta privately and answer truthfully; the
learner only ever sees (u_t, side).  Adaptive adversaries answer however
they like subject to consistency (their running consistent set must keep a
nonempty interior) and commit to a concrete theta* only after the run, so
mistake flags are deferred and recounted against theta*.
"""

from dataclasses import dataclass

import numpy as np

from .baselines import Ellipsoid
from .geometry import as_vector, symmetric_eigen
from .polytope import DegenerateBodyError, Polytope
from .sampling import SamplerConfig, sample_uniform


class AdversaryInconsistencyError(RuntimeError):
    """An adaptive adversary emptied its own consistent set (bug or abuse)."""


class UnsupportedAdversaryError(ValueError):
    pass


@dataclass
class RoundOutcome:
    u: np.ndarray
    x: float
    side: str  # 'below' (x <= u.theta) or 'above' (x > u.theta)
    mistake: object  # bool, or None while deferred in adaptive mode


def fixed_theta_feedback(theta, u, x, epsilon):
    """Truthful feedback for a fixed theta; ties report the below branch."""
    theta = np.asarray(theta, dtype=np.float64)
    val = float(np.dot(u, theta))
    side = "below" if x <= val else "above"
    return RoundOutcome(u=np.asarray(u, dtype=np.float64), x=float(x), side=side,
                        mistake=bool(abs(x - val) > epsilon))


def round_robin_directions(d, t):
    """Coordinate directions cycled in order: e_((t mod d) + 1)."""
    u = np.zeros(d)
    u[t % d] = 1.0
    return u


def greedy_width_adversary(K, n_probe, rng):
    """Approximate max-width direction of K: random probes plus covariance axes."""
    d = K.d
    cands = rng.standard_normal((n_probe, d))
    cands /= np.linalg.norm(cands, axis=1)[:, None]
    cfg = SamplerConfig(burn_in=10 * d * d, thinning=1,
                        n_samples=max(10 * d, 32), rounding=False)
    samples = sample_uniform(K, cfg, rng)
    cov = np.cov(samples, rowvar=False, ddof=1).reshape(d, d)
    _, V = symmetric_eigen(0.5 * (cov + cov.T))
    cands = np.vstack([cands, V.T])
    best = None
    best_w = -np.inf
    for v in cands:
        w = K.width_any(v)
        if w > best_w:
            best_w = w
            best = v
    return best / np.linalg.norm(best)


def finalize_theta(consistent_set):
    """Generic post-hoc theta*: the Chebyshev center of the final set."""
    center, radius = consistent_set.chebyshev_center()
    if radius <= 0:
        raise AdversaryInconsistencyError("final consistent set is empty")
    return center


# ---------------------------------------------------------------------------
# direction sources for fixed-theta environments


class RandomDirections:
    def __init__(self, d, rng):
        self.d = d
        self._gen = rng

    def __call__(self, t, learner):
        g = self._gen.standard_normal(self.d)
        return g / np.linalg.norm(g)


class RoundRobinDirections:
    def __init__(self, d):
        self.d = d

    def __call__(self, t, learner):
        return round_robin_directions(self.d, t)


class GreedyWidthDirections:
    """White-box probe of the learner's current geometry for its widest direction."""

    def __init__(self, d, rng, n_probe=32):
        self.d = d
        self.n_probe = n_probe
        self._gen = rng

    def __call__(self, t, learner):
        geom = learner.knowledge_set
        if isinstance(geom, Polytope):
            return greedy_width_adversary(geom, self.n_probe, self._gen)
        if isinstance(geom, Ellipsoid):
            w, V = symmetric_eigen(geom.shape)
            return V[:, -1] / np.linalg.norm(V[:, -1])
        raise UnsupportedAdversaryError(f"no width oracle for {type(geom).__name__}")


class FixedThetaEnvironment:
    adaptive = False

    def __init__(self, theta, epsilon, directions):
        self._theta = np.asarray(theta, dtype=np.float64)
        self.epsilon = float(epsilon)
        self._directions = directions
        self.done = False

    @property
    def theta(self):
        return self._theta.copy()

    def next_direction(self, t, learner):
        return self._directions(t, learner)

    def feedback(self, u, x):
        return fixed_theta_feedback(self._theta, u, x, self.epsilon)


# ---------------------------------------------------------------------------
# adaptive adversaries


class BisectionEnvironment:
    """Round-robin axis probes answered by keeping the longer interval piece.

    Equivalent to d independent one-dimensional searches over a box; the
    adversary defers mistakes and finally places theta* per coordinate at
    whichever end of the surviving interval maximizes the recount (any point
    of the final set is a consistent choice).
    """

    adaptive = True

    def __init__(self, d, epsilon, lo, hi):
        self.d = d
        self.epsilon = float(epsilon)
        self.lo = np.asarray(lo, dtype=np.float64).copy()
        self.hi = np.asarray(hi, dtype=np.float64).copy()
        if np.any(self.hi <= self.lo):
            raise ValueError("empty starting box")
        self._probes = [[] for _ in range(d)]
        self.done = False

    @property
    def consistent_set(self):
        eye = np.eye(self.d)
        A = np.vstack([eye, -eye])
        b = np.concatenate([self.hi, -self.lo])
        return Polytope(A, b, normalize=False)

    def next_direction(self, t, learner):
        return round_robin_directions(self.d, t)

    def feedback(self, u, x):
        u = as_vector(u, self.d)
        i = int(np.argmax(np.abs(u)))
        if abs(u[i] - 1.0) > 1e-9 or np.linalg.norm(u) - u[i] > 1e-9:
            raise UnsupportedAdversaryError(
                "bisection adversary needs standard basis directions"
            )
        lo_i, hi_i = self.lo[i], self.hi[i]
        below_len = hi_i - max(lo_i, x)  # keep {theta_i >= x}
        above_len = min(hi_i, x) - lo_i  # keep {theta_i <= x}
        side = "below" if below_len >= above_len else "above"
        if side == "below":
            self.lo[i] = max(lo_i, min(x, hi_i))
        else:
            self.hi[i] = min(hi_i, max(x, lo_i))
        if self.hi[i] - self.lo[i] <= 0:
            raise AdversaryInconsistencyError("bisection interval collapsed")
        self._probes[i].append(float(x))
        return RoundOutcome(u=u, x=float(x), side=side, mistake=None)

    def finalize(self):
        theta = np.empty(self.d)
        for i in range(self.d):
            best_val, best_cnt = self.lo[i], -1
            for cand in (self.lo[i], self.hi[i], 0.5 * (self.lo[i] + self.hi[i])):
                cnt = sum(1 for x in self._probes[i] if abs(x - cand) > self.epsilon)
                if cnt > best_cnt:
                    best_cnt, best_val = cnt, cand
            theta[i] = best_val
        return theta


class SimplexCounterexampleEnvironment:
    """White-box phase machine that squeezes simplex sides one axis at a time.

    Starting from a box [o, o + h]^d, phase k repeats three steps: (1) cut
    along e_k keeping the upper side until the k-th simplex side drops to
    ~2*epsilon*k/(k+1); (2) one tilted cut that carves a (k+1)-dimensional
    simplex; (3) cuts along e_{k+1} keeping the upper side until the leftover
    slab is removed, detected by the support of the knowledge set along
    -e_{k+1} reaching the threshold implied by the realized step-2 cut.
    Phase geometry is measured from the learner's actual knowledge set, so
    sampled (approximate) centroids shift thresholds instead of breaking the
    machine; per-step guards advance the phase if a learner stalls it.
    """

    adaptive = True

    def __init__(self, d, epsilon, box_polytope, step1_guard_slack=12, step3_guard_slack=8):
        if d < 2:
            raise ValueError("counterexample adversary needs d >= 2")
        self.d = d
        self.epsilon = float(epsilon)
        self.consistent_set = box_polytope
        self.k = 1
        self.step = 1
        self.done = False
        self._pending_side = None
        self._y_abs = None
        self._step2_geom = None
        self._step_cuts = 0
        self._step1_guard = None
        self._step1_guard_slack = step1_guard_slack
        self._step3_guard = None
        self._step3_guard_slack = step3_guard_slack
        self.health_events = []

    # -- measurement helpers ------------------------------------------------
    def _extent(self, K, i):
        e = np.zeros(self.d)
        e[i] = 1.0
        top = K.support(e)
        bot = -K.support(-e)
        return bot, top

    def _phase_advance(self):
        self.k += 1
        self.step = 1
        self._step_cuts = 0
        self._step1_guard = None
        self._step3_guard = None
        self._y_abs = None
        if self.k >= self.d:
            self.done = True

    def next_direction(self, t, learner):
        K = learner.knowledge_set
        if not isinstance(K, Polytope):
            raise UnsupportedAdversaryError("counterexample adversary reads a polytope learner")
        while True:
            if self.done:
                return None  # exhausted: harness ends the run
            k = self.k
            if self.step == 1:
                o_k, top_k = self._extent(K, k - 1)
                s_k = top_k - o_k
                if self._step1_guard is None:
                    ratio = k / (k + 1.0)
                    target = 2.0 * self.epsilon * k / (k + 1.0)
                    need = np.log(max(target, 1e-300) / max(s_k, 1e-300)) / np.log(ratio)
                    self._step1_guard = int(np.ceil(max(need, 0.0))) + self._step1_guard_slack
                if s_k > 2.0 * self.epsilon * k / (k + 1.0):
                    if self._step_cuts >= self._step1_guard:
                        self.health_events.append((self.k, 1, "guard"))
                    else:
                        u = np.zeros(self.d)
                        u[k - 1] = 1.0
                        self._pending_side = "below"  # keep upper side K_+
                        return u
                self.step = 2
                self._step_cuts = 0
                continue
            if self.step == 2:
                o = np.empty(k)
                s = np.empty(k)
                for i in range(k):
                    o[i], top = self._extent(K, i)
                    s[i] = max(top - o[i], 1e-12)
                o_next, top_next = self._extent(K, k)
                h_cur = max(top_next - o_next, 1e-12)
                c = h_cur * (k + 1.0) / (2.0 * k)
                w = np.zeros(self.d)
                w[:k] = c / s
                w[k] = 1.0
                self._step2_geom = {"o": o, "s": s, "c": c, "w_norm": float(np.linalg.norm(w))}
                self._pending_side = "above"  # keep K_-
                return w / np.linalg.norm(w)
            # step 3
            if self._y_abs is None:
                # step-2 feedback never materialized; skip ahead defensively
                self.health_events.append((self.k, 3, "missing-threshold"))
                self._phase_advance()
                continue
            o_next, top_next = self._extent(K, k)
            extent = top_next - o_next
            if self._step3_guard is None:
                # enough halvings to squeeze the axis near 2*epsilon; a
                # learner whose cut point makes y_abs unreachable (approximate
                # centroids shift it) must not be driven into degeneracy
                halvings = np.log2(max(extent, 1e-12) / max(2.0 * self.epsilon, 1e-12))
                self._step3_guard = self._step3_guard_slack + int(np.ceil(max(halvings, 0.0)))
            reachable = o_next < self._y_abs - 1e-9 and extent > 2.0 * self.epsilon
            if reachable and self._step_cuts < self._step3_guard:
                u = np.zeros(self.d)
                u[k] = 1.0
                self._pending_side = "below"
                return u
            if o_next < self._y_abs - 1e-9:
                self.health_events.append((self.k, 3, "guard"))
            self._phase_advance()

    def feedback(self, u, x):
        side = self._pending_side
        if side is None:
            raise RuntimeError("feedback without a pending direction")
        self._pending_side = None
        sense = "ge" if side == "below" else "le"
        try:
            self.consistent_set = self.consistent_set.add_halfspace(u, x, sense)
        except DegenerateBodyError:
            # The scripted side would empty the consistent set (possible when
            # a learner's cut point lies outside the knowledge set, e.g. a
            # cylindrified centroid).  Consistency is non-negotiable: answer
            # with the only legal side and note the deviation.
            side = "above" if side == "below" else "below"
            sense = "ge" if side == "below" else "le"
            self.health_events.append((self.k, self.step, "side-flip"))
            try:
                self.consistent_set = self.consistent_set.add_halfspace(u, x, sense)
            except DegenerateBodyError as exc:
                raise AdversaryInconsistencyError(str(exc)) from exc
        self._step_cuts += 1
        if self.step == 2:
            geom = self._step2_geom
            tau_w = x * geom["w_norm"]
            offset = float(np.sum(geom["c"] * geom["o"] / geom["s"]))
            self._y_abs = tau_w - offset - geom["c"]
            self.step = 3
            self._step_cuts = 0
        return RoundOutcome(u=u, x=float(x), side=side, mistake=None)

    def finalize(self):
        return finalize_theta(self.consistent_set)


def adaptive_bisection_feedback(env, u, x):
    """Spec-name wrapper over BisectionEnvironment.feedback."""
    return env.feedback(u, x)
