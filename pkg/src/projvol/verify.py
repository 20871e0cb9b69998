"""Property-oracle suites for the convex-geometry statements the learner relies on.

Each suite checks one quantitative statement (centroid-cut volume retention,
directional width retention, off-center cut retention, projection volume vs
body volume, inscribed-ball radius from widths, enclosing-ellipsoid update
exactness) against exact 2-D oracles or seeded Monte-Carlo estimates with
explicit error bands.  The CLI `verify` subcommand runs them all and the
acceptance tests reuse them.
"""

from dataclasses import dataclass

import numpy as np

from .baselines import Ellipsoid, ellipsoid_update, ellipsoid_volume_factor
from .geometry import complement_basis, gram_schmidt, symmetric_eigen
from .polytope import Polytope, bounding_box, exact_polygon, mc_volume, simplex_body
from .rng import RngState
from .sampling import SamplerConfig, estimate_centroid


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checked: int
    violations: int
    details: str

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: checked={self.checked} violations={self.violations} {self.details}"


def random_polygon_polytope(rng, max_extra=8, min_radius=0.05):
    """Bounded random 2-D polytope with nonempty interior: random halfspaces
    around the origin clipped to a box."""
    while True:
        n_extra = int(rng.integers(3, max_extra + 1))
        ang = rng.random(n_extra) * 2 * np.pi
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
        offs = 0.3 + 0.9 * rng.random(n_extra)
        A = np.vstack([dirs, np.eye(2), -np.eye(2)])
        b = np.concatenate([offs, np.full(4, 1.5)])
        P = Polytope(A, b, normalize=False)
        _, radius = P.chebyshev_center()
        if radius > min_radius:
            return P


def random_unit(rng, d):
    g = rng.standard_normal(d)
    return g / np.linalg.norm(g)


def polygon_min_width(P):
    """Exact minimum width of a 2-D polytope: attained at an edge normal."""
    return min(P.width_any(row) for row in P.A)


def suite_simplex_centroid(seed=20_01, trials_per_k=10):
    """Sampled centroid of Delta(s) matches s/(k+1); exact 2-D oracle to 1e-10.

    Thinning is generous (20 steps per dimension per sample) because the
    iid stderr bound understates the error of a correlated walk mean.
    """
    base = RngState(seed)
    checked = 0
    good = 0
    exact_bad = 0
    for k in range(2, 7):
        for trial in range(trials_per_k):
            gen = base.split(k, trial).generator()
            s = 0.2 + 1.3 * gen.random(k)
            s = s / max(1.0, np.linalg.norm(s))  # keep inside the unit ball scale
            body = simplex_body(s)
            cfg = SamplerConfig(burn_in=60 * k * k, thinning=20 * k, n_samples=500, rounding=True)
            est = estimate_centroid(body, cfg, gen)
            target = s / (k + 1.0)
            checked += 1
            if np.all(np.abs(est.z - target) <= 4.0 * est.stderr_bound):
                good += 1
            if k == 2:
                poly = exact_polygon(body)
                if np.max(np.abs(poly.centroid - target)) > 1e-10:
                    exact_bad += 1
    frac = good / checked
    passed = frac >= 0.95 and exact_bad == 0
    return SuiteResult(
        name="simplex-centroid",
        passed=passed,
        checked=checked,
        violations=checked - good + exact_bad,
        details=f"within-4-stderr fraction {frac:.3f} (need >= 0.95), exact-2D mismatches {exact_bad}",
    )


def suite_grunbaum(seed=20_02, n_bodies=200):
    """Centroid cuts keep an area fraction in [1/e - 0.01, 1 - 1/e + 0.01] on each side."""
    gen = RngState(seed).generator()
    lo = 1.0 / np.e - 0.01
    hi = 1.0 - 1.0 / np.e + 0.01
    checked = violations = 0
    for _ in range(n_bodies):
        P = random_polygon_polytope(gen)
        poly = exact_polygon(P)
        u = random_unit(gen, 2)
        cut = float(u @ poly.centroid)
        plus = exact_polygon(P.add_halfspace(u, cut, "ge"))
        minus = exact_polygon(P.add_halfspace(u, cut, "le"))
        for frac in (plus.area / poly.area, minus.area / poly.area):
            checked += 1
            if not (lo <= frac <= hi):
                violations += 1
    return SuiteResult(
        name="grunbaum-volume",
        passed=violations == 0,
        checked=checked,
        violations=violations,
        details=f"band [{lo:.4f}, {hi:.4f}]",
    )


def suite_directional_grunbaum(seed=20_03, n_bodies=200, n_dirs=50):
    """After a centroid cut, every directional width keeps at least 1/(d+1) of itself."""
    gen = RngState(seed).generator()
    checked = violations = 0
    for _ in range(n_bodies):
        P = random_polygon_polytope(gen)
        poly = exact_polygon(P)
        u = random_unit(gen, 2)
        plus = P.add_halfspace(u, float(u @ poly.centroid), "ge")
        for _ in range(n_dirs):
            v = random_unit(gen, 2)
            checked += 1
            if plus.width(v) < P.width(v) / 3.0 - 1e-7:
                violations += 1
    return SuiteResult(
        name="directional-grunbaum",
        passed=violations == 0,
        checked=checked,
        violations=violations,
        details="w(K+, v) >= w(K, v)/3 - 1e-7 at d=2",
    )


def suite_approx_grunbaum(seed=20_04, n_bodies=100):
    """Cuts offset by up to w/(d+1)^2 from the centroid keep at least e^-2 of the volume."""
    gen = RngState(seed).generator()
    checked = violations = 0
    for _ in range(n_bodies):
        P = random_polygon_polytope(gen)
        poly = exact_polygon(P)
        u = random_unit(gen, 2)
        w = P.width(u)
        for scale in (0.2, 0.6, 1.0):
            off = scale * w / 9.0  # (d+1)^2 = 9 at d=2
            kept = exact_polygon(P.add_halfspace(u, float(u @ poly.centroid) + off, "ge"))
            checked += 1
            if kept.area < poly.area / np.e**2 - 1e-7:
                violations += 1
    return SuiteResult(
        name="approximate-grunbaum",
        passed=violations == 0,
        checked=checked,
        violations=violations,
        details="offset cuts in {0.2, 0.6, 1.0} * w/9 keep >= e^-2 of the area",
    )


def _random_polytope_3d(rng, min_radius=0.05):
    while True:
        n_extra = int(rng.integers(4, 10))
        dirs = rng.standard_normal((n_extra, 3))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        offs = 0.3 + 0.9 * rng.random(n_extra)
        A = np.vstack([dirs, np.eye(3), -np.eye(3)])
        b = np.concatenate([offs, np.full(6, 1.5)])
        P = Polytope(A, b, normalize=False)
        _, radius = P.chebyshev_center()
        if radius > min_radius:
            return P


def _min_probe_width(P, rng, n_probe=100):
    cands = [random_unit(rng, P.d) for _ in range(n_probe)]
    cands.extend(P.A)
    return min(P.width_any(v) for v in cands)


def _projection_area_mc_3d(P, L, s_dir, n, rng):
    """MC area of the projection of a 3-D polytope onto the plane spanned by L."""
    lo = np.empty(2)
    hi = np.empty(2)
    for j in range(2):
        hi[j] = P.support(L[j])
        lo[j] = -P.support(-L[j])
    span = hi - lo
    box_area = float(np.prod(span))
    pts = lo + rng.random((n, 2)) * span
    amb = pts @ L
    den = P.A @ s_dir
    r = P.b[None, :] - amb @ P.A.T
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
    hits = int(np.count_nonzero(inside))
    p_hat = hits / n
    stderr = box_area * float(np.sqrt(max(p_hat * (1 - p_hat), 1.0 / n) / n))
    return p_hat * box_area, stderr


def suite_cylindrification(seed=20_05, n_bodies_2d=25, n_bodies_3d=25, n_mc=30000):
    """vol(Pi_L K) <= d(d+1)/width_min * vol(K), exact at d=2 and MC at d=3."""
    gen = RngState(seed).generator()
    checked = violations = 0
    # d = 2: both volumes exact
    for _ in range(n_bodies_2d):
        P = random_polygon_polytope(gen)
        poly = exact_polygon(P)
        delta_hat = polygon_min_width(P)
        ell = random_unit(gen, 2)
        proj_len = P.width_any(ell)
        checked += 1
        if proj_len > 6.0 / delta_hat * poly.area + 1e-9:
            violations += 1
    # d = 3: MC volumes with 3-sigma bands
    for _ in range(n_bodies_3d):
        P = _random_polytope_3d(gen)
        delta_hat = _min_probe_width(P, gen)
        vol = mc_volume(P, bounding_box(P, pad=1e-9), n_mc, gen)
        s_dir = random_unit(gen, 3)
        L = complement_basis(s_dir[None, :], 3)
        proj, proj_err = _projection_area_mc_3d(P, L, s_dir, n_mc, gen)
        bound = 12.0 / delta_hat * vol.estimate  # d(d+1) = 12 at d=3
        combined = 12.0 / delta_hat * vol.stderr + proj_err
        checked += 1
        if proj > bound + 3.0 * combined:
            violations += 1
    return SuiteResult(
        name="cylindrification",
        passed=violations == 0,
        checked=checked,
        violations=violations,
        details="projection volume within d(d+1)/width_min times body volume",
    )


def suite_large_ball(seed=20_06, n_bodies=100, n_probe=100):
    """Width >= delta in all directions forces an inscribed ball of radius delta/(2d)."""
    gen = RngState(seed).generator()
    checked = violations = 0
    for _ in range(n_bodies):
        P = random_polygon_polytope(gen)
        delta_hat = min(_min_probe_width(P, gen, n_probe), polygon_min_width(P))
        _, radius = P.chebyshev_center()
        checked += 1
        if radius < delta_hat / 4.0 - 1e-7:
            violations += 1
    return SuiteResult(
        name="large-ball",
        passed=violations == 0,
        checked=checked,
        violations=violations,
        details="Chebyshev radius >= width_min/(2d) - 1e-7 at d=2",
    )


def suite_ellipsoid(seed=20_07, n_steps=12, n_contain=500):
    """Enclosing-ellipsoid update: exact volume factor and containment of the kept half."""
    gen = RngState(seed).generator()
    checked = violations = 0
    factor_err = 0.0
    for d in range(2, 9):
        E = Ellipsoid(center=np.zeros(d), shape=np.eye(d))
        for _ in range(n_steps):
            u = random_unit(gen, d)
            sense = "le" if gen.random() < 0.5 else "ge"
            E2 = ellipsoid_update(E, u, sense)
            det_ratio = np.sqrt(np.linalg.det(E2.shape) / np.linalg.det(E.shape))
            err = abs(det_ratio - ellipsoid_volume_factor(d))
            factor_err = max(factor_err, err)
            checked += 1
            if err > 1e-10:
                violations += 1
            # containment of the kept half-ellipsoid
            g = gen.standard_normal((n_contain, d))
            g /= np.linalg.norm(g, axis=1)[:, None]
            radii = gen.random(n_contain) ** (1.0 / d)
            ball = g * radii[:, None]
            pts = E.sample_boundary_map(ball)
            keep = (pts - E.center) @ u <= 0 if sense == "le" else (pts - E.center) @ u >= 0
            pts = pts[keep]
            checked += 1
            if not all(E2.contains(p, slack=1e-7) for p in pts):
                violations += 1
            E = E2
    return SuiteResult(
        name="ellipsoid-update",
        passed=violations == 0,
        checked=checked,
        violations=violations,
        details=f"max |volume factor error| {factor_err:.2e} (tol 1e-10)",
    )


ALL_SUITES = (
    suite_simplex_centroid,
    suite_grunbaum,
    suite_directional_grunbaum,
    suite_approx_grunbaum,
    suite_cylindrification,
    suite_large_ball,
    suite_ellipsoid,
)


def run_all(seed_offset=0):
    results = []
    for fn in ALL_SUITES:
        results.append(fn() if seed_offset == 0 else fn(seed=hash((fn.__name__, seed_offset)) % 2**31))
    return results
