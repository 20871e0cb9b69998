"""Hit-and-run uniform sampling over full-dimensional polytopes, plus rounding.

The walks consume pre-generated randomness (normals for directions, uniforms
for chord positions) so that a (seed, config) pair pins the entire sample
list regardless of backend-internal details.  Subspace-restricted walks over
projections live in :mod:`projvol.projected_volume`, where the chord oracle
is an LP rather than a ratio test.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import AffineMap, symmetric_eigen
from .kernels import ambient_walk, chord_bounds
from .polytope import Polytope

COV_EIG_FLOOR = 1e-14


@dataclass(frozen=True)
class SamplerConfig:
    burn_in: int
    thinning: int
    n_samples: int
    rounding: bool = True

    def __post_init__(self):
        if self.burn_in < 0 or self.thinning < 1 or self.n_samples < 1:
            raise ValueError("need burn_in >= 0, thinning >= 1, n_samples >= 1")

    def with_samples(self, n_samples):
        return SamplerConfig(self.burn_in, self.thinning, int(n_samples), self.rounding)


def default_config(d, rounding=True):
    """Desk-scale walk budget; far below the theoretical schedule but
    empirically sufficient (and configurable when fidelity runs need more)."""
    return SamplerConfig(
        burn_in=50 * d * d,
        thinning=d,
        n_samples=max(1000, 100 * d),
        rounding=rounding,
    )


@dataclass
class CentroidEstimate:
    z: np.ndarray
    n: int
    stderr_bound: float  # max per-coordinate sample stdev / sqrt(n)


def _har_step(P, x, g, t_frac, transform=None):
    """One hit-and-run move with injected randomness.

    g is the direction draw (mapped through the inverse rounding transform),
    t_frac in [0, 1] the position on the chord.  Returns (x_new, degenerate);
    a degenerate chord leaves x unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    t_inv = np.eye(P.d) if transform is None else transform.matrix_inv
    direction = t_inv @ g
    nn = np.linalg.norm(direction)
    if nn < 1e-300:
        return x.copy(), True
    direction = direction / nn
    t_lo, t_hi = chord_bounds(P.A, P.b, x, direction)
    if t_hi - t_lo < 1e-14 or t_hi > 1e299 or t_lo < -1e299:
        return x.copy(), True
    t = t_lo + t_frac * (t_hi - t_lo)
    return x + t * direction, False


def hit_and_run_step(P, x, rng, transform=None):
    """Single uniform hit-and-run step from x (must lie in P)."""
    if not P.contains(x, tol=1e-9):
        raise ValueError("hit-and-run start point outside polytope")
    g = rng.standard_normal(P.d)
    t_frac = rng.random()
    x_new, _ = _har_step(P, x, g, t_frac, transform)
    return x_new


def _pilot_transform(P, cfg, rng, warm):
    n_pilot = max(10 * P.d, 64)
    t_inv = np.eye(P.d)
    total = cfg.burn_in + n_pilot
    normals = rng.standard_normal((total, P.d))
    unifs = rng.random(total)
    samples, _, _ = ambient_walk(P.A, P.b, warm, t_inv, normals, unifs, cfg.burn_in, 1, n_pilot)
    transform, _ = rounding_transform(samples)
    return transform


def sample_uniform(P, cfg, rng, warm=None, transform=None, return_stats=False):
    """cfg.n_samples points of the uniform distribution on P.

    Each sample is taken after burn_in + i*thinning steps.  warm defaults to
    the Chebyshev center.  With cfg.rounding and no transform given, a pilot
    walk estimates an isotropic rounding map first.
    """
    warm = P.interior_point() if warm is None else np.asarray(warm, dtype=np.float64)
    if not P.contains(warm, tol=1e-9):
        raise ValueError("warm start outside polytope")
    if transform is None and cfg.rounding:
        transform = _pilot_transform(P, cfg, rng, warm)
    t_inv = np.eye(P.d) if transform is None else transform.matrix_inv
    total = cfg.burn_in + cfg.thinning * cfg.n_samples
    normals = rng.standard_normal((total, P.d))
    unifs = rng.random(total)
    samples, n_deg, x_last = ambient_walk(
        P.A, P.b, warm, np.ascontiguousarray(t_inv), normals, unifs,
        cfg.burn_in, cfg.thinning, cfg.n_samples,
    )
    if return_stats:
        return samples, {"degenerate_chords": int(n_deg), "last_point": x_last}
    return samples


def repair_into_body(P, z, margin=1e-12):
    """Pull z inside P along the segment to the Chebyshev center if needed."""
    z = np.asarray(z, dtype=np.float64)
    s = P.slack(z)
    if np.min(s) >= margin:
        return z
    center, radius = P.chebyshev_center()
    sc = P.slack(center)
    alpha = 0.0
    for si, sci in zip(s, sc):
        if si < margin:
            denom = sci - si
            if denom <= 0:
                alpha = 1.0
                break
            alpha = max(alpha, min(1.0, (margin - si) / denom))
    return z + alpha * (center - z)


def estimate_centroid(P, cfg, rng, warm=None, transform=None):
    """Sample-mean centroid with a per-coordinate standard-error bound."""
    samples = sample_uniform(P, cfg, rng, warm=warm, transform=transform)
    z = samples.mean(axis=0)
    n = samples.shape[0]
    if n > 1:
        stderr = float(np.max(samples.std(axis=0, ddof=1))) / np.sqrt(n)
    else:
        stderr = np.inf
    z = repair_into_body(P, z)
    return CentroidEstimate(z=z, n=n, stderr_bound=stderr)


def rounding_transform(samples):
    """Affine map sending the sample cloud to (approximately) isotropic position.

    Returns (AffineMap, degenerate).  Rank-deficient covariance (smallest
    eigenvalue under 1e-14) is flagged and the identity returned.
    """
    samples = np.asarray(samples, dtype=np.float64)
    n, d = samples.shape
    if n < 10 * d:
        raise ValueError(f"rounding needs >= 10*d samples, got {n} for d={d}")
    mu = samples.mean(axis=0)
    cov = np.cov(samples, rowvar=False, ddof=1).reshape(d, d)
    w, V = symmetric_eigen(0.5 * (cov + cov.T))
    if np.min(w) < COV_EIG_FLOOR:
        return AffineMap.identity(d), True
    M = V @ np.diag(1.0 / np.sqrt(w)) @ V.T
    return AffineMap(M, -M @ mu), False
