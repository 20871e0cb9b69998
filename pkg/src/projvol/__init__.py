"""projvol: projected-volume multidimensional binary search at desk scale.

A learner guesses dot products u . theta from binary feedback, maintaining a
polytope knowledge set plus a set of certified-thin directions, and cuts
through the centroid of the cylindrified set.  The package bundles the
convex-geometry kernel that makes this concrete (dense LP over H-polytopes,
hit-and-run sampling, exact 2-D oracles, Monte-Carlo volume), the centroid
and ellipsoid baselines, the adversaries that separate them, and an
experiment harness with a CLI.
"""

from ._backend import NUMBA_ENABLED, backend_name
from .baselines import CentroidLearner, Ellipsoid, EllipsoidLearner, ellipsoid_update
from .geometry import AffineMap, complement_basis, gram_schmidt, project_point, symmetric_eigen
from .harness import ExperimentConfig, RunRecord, emit_csv, emit_json, fit_regret_constant, run_experiment
from .polytope import Polytope, exact_polygon, initial_body, lp_solve, mc_volume, simplex_body
from .projected_volume import (
    KnowledgeState,
    Prediction,
    ProjectedVolumeLearner,
    cylindrified_centroid,
    find_thin_directions,
    stopping_consistency,
    subspace_chord,
)
from .rng import RngState
from .sampling import SamplerConfig, estimate_centroid, hit_and_run_step, rounding_transform, sample_uniform

__version__ = "0.1.0"
