"""H-polytope knowledge sets: supports, cuts, chords, exact 2-D oracle, MC volume.

A :class:`Polytope` is {x : A x <= b} with unit-normalized rows, immutable
after construction (cuts return new values).  Every polytope lazily caches
its Chebyshev center, which doubles as the interior warm start for all LP
queries and as the nonempty-interior certificate.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import lp
from .geometry import as_vector
from .kernels import chord_bounds

ROW_NORM_TOL = 1e-9
DEGENERATE_RADIUS = 1e-12


class DegenerateBodyError(RuntimeError):
    """Knowledge set has (numerically) empty interior."""


class Polytope:
    __slots__ = ("A", "b", "_cheb")

    def __init__(self, A, b, normalize=True):
        A = np.array(A, dtype=np.float64, copy=True)
        b = np.array(b, dtype=np.float64, copy=True).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise ValueError("A must be (m, d) with matching b of length m")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite constraint data")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms < 1e-12):
            raise ValueError("zero constraint row")
        if normalize:
            A /= norms[:, None]
            b /= norms
        elif np.any(np.abs(norms - 1.0) > ROW_NORM_TOL):
            raise ValueError("rows not unit-normalized")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "_cheb", None)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("Polytope is immutable")

    @property
    def d(self):
        return self.A.shape[1]

    @property
    def m(self):
        return self.A.shape[0]

    def __repr__(self):
        return f"Polytope(d={self.d}, m={self.m})"

    # -- feasibility ----------------------------------------------------
    def slack(self, x):
        return self.b - self.A @ as_vector(x, self.d)

    def contains(self, x, tol=1e-9):
        return bool(np.min(self.slack(x)) >= -tol)

    def contains_many(self, X, tol=0.0):
        X = np.asarray(X, dtype=np.float64)
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    # -- LP-backed queries ----------------------------------------------
    def chebyshev_center(self):
        """(center, radius) of the largest inscribed ball, cached."""
        if self._cheb is None:
            object.__setattr__(self, "_cheb", lp.chebyshev_lp(self.A, self.b))
        c, r = self._cheb
        return c.copy(), r

    def interior_point(self):
        c, r = self.chebyshev_center()
        if r <= DEGENERATE_RADIUS:
            raise DegenerateBodyError(f"Chebyshev radius {r:.3e}")
        return c

    def support(self, u):
        """max over the polytope of u . x (u any nonzero vector)."""
        u = as_vector(u, self.d)
        if np.linalg.norm(u) < 1e-15:
            raise ValueError("direction is zero")
        res = lp.maximize_over(self.A, self.b, u, self.interior_point())
        if res.status != "optimal":
            raise lp.LpError(f"support query returned {res.status}; polytope unbounded?")
        return res.value

    def argsupport(self, u):
        u = as_vector(u, self.d)
        res = lp.maximize_over(self.A, self.b, u, self.interior_point())
        if res.status != "optimal":
            raise lp.LpError(f"support query returned {res.status}")
        return res.x

    def width(self, u):
        """Directional width max_{x,y} u . (x - y) for a unit vector u."""
        u = as_vector(u, self.d)
        if abs(np.linalg.norm(u) - 1.0) > ROW_NORM_TOL:
            raise ValueError("width direction must be a unit vector")
        return self.width_any(u)

    def width_any(self, v):
        """Width along an arbitrary (possibly non-unit) vector."""
        return self.support(v) + self.support(-np.asarray(v, dtype=np.float64))

    # -- cuts -------------------------------------------------------------
    def add_halfspace(self, u, c, sense):
        """Intersect with {u . x <= c} ('le') or {u . x >= c} ('ge').

        The new row is unit-normalized.  Raises DegenerateBodyError when the
        result has Chebyshev radius below 1e-12.
        """
        u = as_vector(u, self.d)
        nu = np.linalg.norm(u)
        if abs(nu - 1.0) > ROW_NORM_TOL:
            raise ValueError("cut direction must be a unit vector")
        if sense in ("le", "<="):
            row, rhs = u / nu, c / nu
        elif sense in ("ge", ">="):
            row, rhs = -u / nu, -c / nu
        else:
            raise ValueError(f"sense must be 'le' or 'ge', got {sense!r}")
        A2 = np.vstack([self.A, row[None, :]])
        b2 = np.append(self.b, rhs)
        out = Polytope(A2, b2, normalize=False)
        _, r = out.chebyshev_center()
        if r < DEGENERATE_RADIUS:
            raise DegenerateBodyError(
                f"cut left Chebyshev radius {r:.3e} (< {DEGENERATE_RADIUS:g})"
            )
        return out

    def pruned(self, slack_tol=1e-7):
        """Drop rows whose LP-certified slack over the remaining body exceeds slack_tol."""
        keep = list(range(self.m))
        interior = self.interior_point()
        i = 0
        while i < len(keep):
            row_idx = keep[i]
            rest = [j for j in keep if j != row_idx]
            if not rest:
                break
            res = lp.maximize_over(self.A[rest], self.b[rest], self.A[row_idx], interior)
            if res.status == "optimal" and res.value <= self.b[row_idx] - slack_tol:
                keep.pop(i)
            else:
                i += 1
        if len(keep) == self.m:
            return self
        return Polytope(self.A[keep], self.b[keep], normalize=False)

    # -- chords -----------------------------------------------------------
    def chord(self, x, direction):
        """(t_lo, t_hi) with x + t*direction inside for exactly t in [t_lo, t_hi].

        Pure ratio tests over the rows, no LP.  x must lie in the polytope
        (1e-9 slack); direction must be unit.
        """
        x = as_vector(x, self.d)
        direction = as_vector(direction, self.d)
        if abs(np.linalg.norm(direction) - 1.0) > ROW_NORM_TOL:
            raise ValueError("chord direction must be a unit vector")
        if not self.contains(x, tol=1e-9):
            raise ValueError("chord base point outside polytope")
        t_lo, t_hi = chord_bounds(self.A, self.b, x, direction)
        if t_hi > 1e299 or t_lo < -1e299:
            raise lp.LpError("chord unbounded; polytope not bounded along direction")
        return float(t_lo), float(t_hi)

    # -- serialization ------------------------------------------------------
    def to_json(self):
        rows = [list(map(float, row)) + [float(rhs)] for row, rhs in zip(self.A, self.b)]
        return json.dumps({"d": self.d, "rows": rows})

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        rows = np.asarray(payload["rows"], dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != payload["d"] + 1:
            raise ValueError("malformed polytope JSON")
        return cls(rows[:, :-1], rows[:, -1], normalize=False)


def initial_body(kind, d, A=None, b=None):
    """Starting knowledge sets.

    inscribed_cube   [-1/sqrt(d), 1/sqrt(d)]^d, the axis cube inscribed in
                     the unit ball.
    unit_box_scaled  [0, 1/sqrt(d)]^d, the box the counterexample and
                     lower-bound constructions start from.
    custom           caller-supplied (A, b), validated bounded and nonempty.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    h = 1.0 / np.sqrt(d)
    eye = np.eye(d)
    stack = np.vstack([eye, -eye])
    if kind == "inscribed_cube":
        return Polytope(stack, np.full(2 * d, h), normalize=False)
    if kind == "unit_box_scaled":
        rhs = np.concatenate([np.full(d, h), np.zeros(d)])
        return Polytope(stack, rhs, normalize=False)
    if kind == "custom":
        if A is None or b is None:
            raise ValueError("custom body needs A and b")
        P = Polytope(A, b)
        try:
            _, radius = P.chebyshev_center()
            if radius <= 0:
                raise ValueError("custom body is empty (or has empty interior)")
            for i in range(d):
                P.width(eye[i])  # raises if unbounded along an axis
        except lp.LpError as exc:
            raise ValueError(f"custom body is unbounded: {exc}") from exc
        return P
    raise ValueError(f"unknown initial body kind {kind!r}")


def lp_solve(c, P, sense="max"):
    """Optimize the linear functional c over P; returns an LpResult.

    Empty P (Chebyshev radius <= 0) reports status 'infeasible', which
    signals an inconsistent knowledge set upstream.
    """
    c = as_vector(c, P.d)
    center, radius = P.chebyshev_center()
    if radius <= 0.0:
        return lp.LpResult("infeasible", np.full(P.d, np.nan), np.nan)
    obj = c if sense == "max" else -c
    res = lp.maximize_over(P.A, P.b, obj, center)
    if res.status != "optimal":
        return lp.LpResult(res.status, res.x, np.inf if sense == "max" else -np.inf)
    value = res.value if sense == "max" else -res.value
    return lp.LpResult("optimal", res.x, value)


def support(P, u):
    return P.support(u)


def width(P, u):
    return P.width(u)


def add_halfspace(P, u, c, sense):
    return P.add_halfspace(u, c, sense)


def chebyshev_center(P):
    return P.chebyshev_center()


def chord(P, x, direction):
    return P.chord(x, direction)


# ---------------------------------------------------------------------------
# exact 2-D oracle


@dataclass
class Polygon2D:
    vertices: np.ndarray  # (n, 2), counter-clockwise
    area: float
    centroid: np.ndarray


def exact_polygon(P):
    """Exact vertex/area/centroid oracle for a bounded 2-D polytope.

    Vertices come from all feasible constraint-pair intersections, ordered
    counter-clockwise; area by the shoelace formula; centroid by the
    standard polygon centroid formula.
    """
    if P.d != 2:
        raise ValueError("exact_polygon needs d = 2")
    A, b = P.A, P.b
    m = A.shape[0]
    pts = []
    for i in range(m):
        for j in range(i + 1, m):
            M = np.array([A[i], A[j]])
            det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
            if abs(det) < 1e-12:
                continue
            v = np.linalg.solve(M, np.array([b[i], b[j]]))
            if np.all(A @ v <= b + 1e-8):
                pts.append(v)
    uniq = []
    for v in pts:
        if not any(np.linalg.norm(v - w) <= 1e-9 for w in uniq):
            uniq.append(v)
    if len(uniq) < 3:
        raise DegenerateBodyError("fewer than 3 polygon vertices")
    mean = np.mean(uniq, axis=0)
    uniq.sort(key=lambda v: np.arctan2(v[1] - mean[1], v[0] - mean[0]))
    V = np.array(uniq)
    x, y = V[:, 0], V[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    if area < 0:  # enforce CCW
        V = V[::-1]
        x, y = V[:, 0], V[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = 0.5 * float(np.sum(cross))
    if area < 1e-14:
        raise DegenerateBodyError(f"polygon area {area:.3e} below 1e-14")
    cx = float(np.sum((x + xn) * cross) / (6.0 * area))
    cy = float(np.sum((y + yn) * cross) / (6.0 * area))
    return Polygon2D(vertices=V, area=area, centroid=np.array([cx, cy]))


# ---------------------------------------------------------------------------
# Monte-Carlo volume


@dataclass
class McVolume:
    estimate: float
    stderr: float
    hits: int
    n: int

    @property
    def zero_hits(self):
        return self.hits == 0


def bounding_box(P, pad=0.0):
    """Axis-aligned bounding box (lo, hi) via 2d support LPs."""
    d = P.d
    lo = np.empty(d)
    hi = np.empty(d)
    eye = np.eye(d)
    for i in range(d):
        hi[i] = P.support(eye[i]) + pad
        lo[i] = -P.support(-eye[i]) - pad
    return lo, hi


def mc_volume(P, box, n, rng):
    """Rejection-sampling volume estimate of P inside the given box.

    box = (lo, hi) must contain P.  stderr is the binomial standard error;
    on zero hits the estimate is 0 and stderr holds the rule-of-three bound
    3/n * vol(box) (zero_hits flags the case).
    """
    if n < 1000:
        raise ValueError("mc_volume needs n >= 1000")
    lo, hi = (np.asarray(v, dtype=np.float64) for v in box)
    span = hi - lo
    if np.any(span <= 0):
        raise ValueError("degenerate bounding box")
    box_vol = float(np.prod(span))
    pts = lo + rng.random((n, P.d)) * span
    hits = int(np.count_nonzero(P.contains_many(pts)))
    p_hat = hits / n
    if hits == 0:
        return McVolume(0.0, 3.0 / n * box_vol, 0, n)
    stderr = box_vol * np.sqrt(p_hat * (1.0 - p_hat) / n)
    return McVolume(p_hat * box_vol, float(stderr), hits, n)


def simplex_body(s):
    """Delta(s) = {x >= 0, sum x_i / s_i <= 1} as a Polytope."""
    s = as_vector(np.asarray(s, dtype=np.float64))
    if np.any(s <= 0):
        raise ValueError("simplex side lengths must be positive")
    k = s.shape[0]
    A = np.vstack([-np.eye(k), (1.0 / s)[None, :]])
    b = np.concatenate([np.zeros(k), [1.0]])
    return Polytope(A, b)
