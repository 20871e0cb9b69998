"""Comparison learners: plain centroid cuts and the ellipsoid method.

The centroid learner guesses u . z_t with z_t the centroid of the raw
knowledge set (no thin-direction bookkeeping).  The ellipsoid learner keeps
a knowledge ellipsoid, cuts through its center when the width along the
queried direction is significant, and replaces the half-ellipsoid with its
minimum-volume enclosing ellipsoid.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import as_vector, symmetric_eigen
from .polytope import Polytope
from .projected_volume import Prediction
from .rng import RngState
from .sampling import default_config, repair_into_body, rounding_transform, sample_uniform


@dataclass
class Ellipsoid:
    """{x : (x - center)^T shape^{-1} (x - center) <= 1} with shape PD."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.shape = np.asarray(self.shape, dtype=np.float64)
        d = self.center.shape[0]
        if self.shape.shape != (d, d):
            raise ValueError("shape matrix dimension mismatch")
        if d and np.max(np.abs(self.shape - self.shape.T)) > 1e-10:
            raise ValueError("shape matrix not symmetric")
        w, _ = symmetric_eigen(self.shape)
        if np.any(w <= 0):
            raise ValueError("shape matrix not positive definite")

    @property
    def d(self):
        return self.center.shape[0]

    def width(self, u):
        u = as_vector(u, self.d)
        return 2.0 * float(np.sqrt(u @ self.shape @ u))

    def max_width(self):
        w, _ = symmetric_eigen(self.shape)
        return 2.0 * float(np.sqrt(w[-1]))

    def quad(self, x):
        v = as_vector(x, self.d) - self.center
        return float(v @ np.linalg.solve(self.shape, v))

    def contains(self, x, slack=1e-7):
        return self.quad(x) <= 1.0 + slack

    def sample_boundary_map(self, u_ball):
        """Map points of the unit ball into the ellipsoid (for containment tests)."""
        w, V = symmetric_eigen(self.shape)
        half = V @ np.diag(np.sqrt(w)) @ V.T
        return self.center + u_ball @ half.T


def ellipsoid_volume_factor(d):
    """Exact per-update volume ratio of the enclosing-ellipsoid step."""
    if d == 1:
        return 0.5
    return (d / (d + 1.0)) * (d * d / (d * d - 1.0)) ** ((d - 1) / 2.0)


def ellipsoid_update(E, u, sense):
    """Minimum-volume ellipsoid enclosing the half-ellipsoid from a central cut.

    sense 'le' keeps {x : u . x <= u . center}, 'ge' the other half.  d = 1
    degenerates to exact interval halving.
    """
    u = as_vector(u, E.d)
    d = E.d
    Mu = E.shape @ u
    denom = float(np.sqrt(u @ Mu))
    if denom <= 0:
        raise ValueError("degenerate direction for ellipsoid update")
    g = Mu / denom
    sign = -1.0 if sense in ("le", "<=") else 1.0
    if d == 1:
        half = np.sqrt(E.shape[0, 0])
        center = E.center + sign * (half / 2.0) * u / abs(u[0])
        return Ellipsoid(center=center, shape=E.shape / 4.0)
    center = E.center + sign * g / (d + 1.0)
    M = (d * d / (d * d - 1.0)) * (E.shape - (2.0 / (d + 1.0)) * np.outer(g, g))
    M = 0.5 * (M + M.T)
    return Ellipsoid(center=center, shape=M)


def enclosing_ball(P):
    """Ball around the axis-aligned bounding box of P (always contains P)."""
    d = P.d
    lo = np.empty(d)
    hi = np.empty(d)
    eye = np.eye(d)
    for i in range(d):
        hi[i] = P.support(eye[i])
        lo[i] = -P.support(-eye[i])
    center = 0.5 * (lo + hi)
    radius = 0.5 * float(np.linalg.norm(hi - lo))
    return Ellipsoid(center=center, shape=radius * radius * np.eye(d))


class CentroidLearner:
    """Cuts through the sampled centroid of the knowledge set every round."""

    def __init__(self, body, epsilon, sampler=None, rng=None,
                 prune_every=50, rounding_every=25):
        self.epsilon = float(epsilon)
        self.K = body
        self.sampler = sampler if sampler is not None else default_config(body.d)
        if rng is None:
            rng = RngState(0).split(11)
        self._gen = rng.generator() if isinstance(rng, RngState) else rng
        self.prune_every = int(prune_every)
        self.rounding_every = int(rounding_every)
        self._transform = None
        self._cuts_since_prune = 0
        self._cuts_since_round = 0
        self._last_samples = None

    @property
    def knowledge_set(self):
        return self.K

    @property
    def n_small(self):
        return 0

    @property
    def min_certified_width(self):
        return np.nan

    @property
    def converged(self):
        return False

    def predict(self, u):
        u = as_vector(u, self.K.d)
        samples = sample_uniform(self.K, self.sampler, self._gen, transform=self._transform)
        self._last_samples = samples
        z = repair_into_body(self.K, samples.mean(axis=0))
        flag = self.K.width_any(u) > self.epsilon
        return Prediction(x=float(u @ z), z=z, n_t_flag=bool(flag))

    def observe(self, u, x, side):
        sense = "ge" if side == "below" else "le"
        self.K = self.K.add_halfspace(u, x, sense)
        self._cuts_since_prune += 1
        self._cuts_since_round += 1
        if self._cuts_since_prune >= self.prune_every:
            self.K = self.K.pruned()
            self._cuts_since_prune = 0
        if self._cuts_since_round >= self.rounding_every and self._last_samples is not None:
            if self._last_samples.shape[0] >= 10 * self.K.d:
                tmap, degenerate = rounding_transform(self._last_samples)
                self._transform = None if degenerate else tmap
            self._cuts_since_round = 0


def centroid_learner_step(K, u, epsilon, cfg, rng):
    """One predict/cut round of the centroid learner as a pure function.

    Returns (x, cut_fn) where cut_fn(side) produces the updated polytope;
    the class above is the stateful variant used by the harness.
    """
    samples = sample_uniform(K, cfg, rng)
    z = repair_into_body(K, samples.mean(axis=0))
    x = float(as_vector(u, K.d) @ z)

    def cut(side):
        sense = "ge" if side == "below" else "le"
        return K.add_halfspace(u, x, sense)

    return x, cut


class EllipsoidLearner:
    """Prior-work style baseline: central ellipsoid cuts above the width threshold."""

    def __init__(self, body, epsilon, rng=None):
        self.epsilon = float(epsilon)
        if isinstance(body, Ellipsoid):
            self.E = body
        elif isinstance(body, Polytope):
            self.E = enclosing_ball(body)
        else:
            raise TypeError("EllipsoidLearner needs a Polytope or Ellipsoid start")

    @property
    def knowledge_set(self):
        return self.E

    @property
    def n_small(self):
        return 0

    @property
    def min_certified_width(self):
        return np.nan

    @property
    def converged(self):
        return self.E.max_width() <= self.epsilon

    def predict(self, u):
        u = as_vector(u, self.E.d)
        x = float(u @ self.E.center)
        return Prediction(x=x, z=self.E.center.copy(),
                          n_t_flag=bool(self.E.width(u) > self.epsilon))

    def observe(self, u, x, side):
        # No-cut rule: with width <= epsilon along u the guess is already
        # within epsilon/2 of every consistent value; cutting would only
        # shrink the ellipsoid needlessly.
        if self.E.width(u) <= self.epsilon:
            return
        sense = "ge" if side == "below" else "le"
        self.E = ellipsoid_update(self.E, u, sense)
