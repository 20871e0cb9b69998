"""Experiment runner: learner vs environment under the binary-feedback protocol.

Each round: the environment produces a unit direction u_t, the learner
guesses x_t for u_t . theta, the environment reports whether x_t <= u_t.theta
('below') or x_t > u_t.theta ('above'), and the learner cuts.  A mistake is
|x_t - u_t . theta| > epsilon, strictly; adaptive adversaries defer the flag
until theta* is finalized after the run.  The learner never sees theta: the
environment holds it privately (fixed mode) or invents it post hoc
(adaptive mode).
"""

import json
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .adversaries import (
    AdversaryInconsistencyError,
    BisectionEnvironment,
    FixedThetaEnvironment,
    GreedyWidthDirections,
    RandomDirections,
    SimplexCounterexampleEnvironment,
)
from .baselines import CentroidLearner, Ellipsoid, EllipsoidLearner
from .polytope import DegenerateBodyError, Polytope, initial_body
from .projected_volume import (
    ProjectedVolumeLearner,
    analysis_delta,
    appendix_rho,
    default_delta,
    default_rho,
    phi_estimate,
)
from .rng import RngState
from .sampling import SamplerConfig, default_config

LEARNERS = ("projected_volume", "centroid", "ellipsoid")
ADVERSARIES = ("fixed_random", "round_robin_adaptive", "simplex_counterexample", "greedy_width")
DELTA_POLICIES = ("practical", "paper_main", "paper_appendix", "explicit")

CSV_COLUMNS = ("t", "u", "x", "side", "mistake", "n_small", "n_t_flag", "min_width", "phi_mc")

# rng stream roles
_ROLE_THETA = 0
_ROLE_DIRECTIONS = 1
_ROLE_LEARNER = 2
_ROLE_ADVERSARY = 3
_ROLE_PHI = 4


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    d: int
    epsilon: float
    learner: str = "projected_volume"
    adversary: str = "fixed_random"
    delta_policy: str = "practical"
    delta: float = None  # used when delta_policy == 'explicit'
    max_rounds: int = 1000
    seed: int = 0
    replicas: int = 1
    initial_body_kind: str = None  # default depends on the adversary
    sampler_burn_in: int = None
    sampler_thinning: int = None
    sampler_n: int = None
    sampler_rounding: bool = True
    adapt_samples: bool = None  # default depends on delta_policy
    phi_on: bool = False
    phi_samples: int = 2000
    n_probe: int = 32
    confirm_rounds: int = 100

    def validate(self):
        if not (1 <= self.d <= 16):
            raise ConfigError(f"d={self.d} outside [1, 16]")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError(f"epsilon={self.epsilon} outside (0, 1)")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if self.learner not in LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r} (choose from {LEARNERS})")
        if self.adversary not in ADVERSARIES:
            raise ConfigError(f"unknown adversary {self.adversary!r} (choose from {ADVERSARIES})")
        if self.delta_policy not in DELTA_POLICIES:
            raise ConfigError(f"unknown delta policy {self.delta_policy!r}")
        if self.delta_policy == "explicit" and (self.delta is None or self.delta <= 0):
            raise ConfigError("delta_policy 'explicit' needs a positive --delta")
        if self.adversary == "simplex_counterexample" and self.d < 2:
            raise ConfigError("simplex_counterexample needs d >= 2")
        return self

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def resolve_delta_rho(cfg):
    """(delta, rho, adapt_samples) implied by the config's delta policy."""
    d, eps = cfg.d, cfg.epsilon
    if cfg.delta_policy == "practical":
        delta, rho, adapt = default_delta(d, eps), default_rho(d, eps), False
    elif cfg.delta_policy == "paper_main":
        delta, rho, adapt = analysis_delta(d, eps), default_rho(d, eps), True
    elif cfg.delta_policy == "paper_appendix":
        delta, rho, adapt = analysis_delta(d, eps), appendix_rho(d, eps), True
    else:
        delta, rho, adapt = float(cfg.delta), default_rho(d, eps), False
    if cfg.delta is not None and cfg.delta_policy != "explicit":
        delta = float(cfg.delta)
    if cfg.adapt_samples is not None:
        adapt = bool(cfg.adapt_samples)
    return delta, rho, adapt


def _default_body_kind(adversary):
    if adversary in ("round_robin_adaptive", "simplex_counterexample"):
        return "unit_box_scaled"
    return "inscribed_cube"


def _sampler_for(cfg):
    base = default_config(cfg.d, rounding=cfg.sampler_rounding)
    return SamplerConfig(
        burn_in=cfg.sampler_burn_in if cfg.sampler_burn_in is not None else base.burn_in,
        thinning=cfg.sampler_thinning if cfg.sampler_thinning is not None else base.thinning,
        n_samples=cfg.sampler_n if cfg.sampler_n is not None else base.n_samples,
        rounding=cfg.sampler_rounding,
    )


def _sample_theta(body, kind, rng):
    lo = np.array([-body.support(-e) for e in np.eye(body.d)])
    hi = np.array([body.support(e) for e in np.eye(body.d)])
    if kind in ("inscribed_cube", "unit_box_scaled"):
        return lo + rng.random(body.d) * (hi - lo)
    # general bodies: rejection sample from the bounding box
    for _ in range(10000):
        x = lo + rng.random(body.d) * (hi - lo)
        if body.contains(x):
            return x
    raise ConfigError("failed to sample theta inside the custom body")


def build_learner(cfg, body, replica=0):
    delta, rho, adapt = resolve_delta_rho(cfg)
    sampler = _sampler_for(cfg)
    rng = RngState(cfg.seed).split(replica, _ROLE_LEARNER)
    if cfg.learner == "projected_volume":
        return ProjectedVolumeLearner(
            body, cfg.epsilon, delta=delta, rho=rho, sampler=sampler,
            rng=rng, adapt_samples=adapt,
        )
    if cfg.learner == "centroid":
        return CentroidLearner(body, cfg.epsilon, sampler=sampler, rng=rng)
    if cfg.learner == "ellipsoid":
        return EllipsoidLearner(body, cfg.epsilon)
    raise ConfigError(f"unknown learner {cfg.learner!r}")


def build_environment(cfg, body, kind, replica=0):
    if cfg.adversary == "fixed_random":
        theta = _sample_theta(body, kind, RngState(cfg.seed).split(replica, _ROLE_THETA).generator())
        dirs = RandomDirections(cfg.d, RngState(cfg.seed).split(replica, _ROLE_DIRECTIONS).generator())
        return FixedThetaEnvironment(theta, cfg.epsilon, dirs)
    if cfg.adversary == "greedy_width":
        theta = _sample_theta(body, kind, RngState(cfg.seed).split(replica, _ROLE_THETA).generator())
        dirs = GreedyWidthDirections(
            cfg.d, RngState(cfg.seed).split(replica, _ROLE_ADVERSARY).generator(), n_probe=cfg.n_probe
        )
        return FixedThetaEnvironment(theta, cfg.epsilon, dirs)
    if cfg.adversary == "round_robin_adaptive":
        eye = np.eye(cfg.d)
        lo = np.array([-body.support(-e) for e in eye])
        hi = np.array([body.support(e) for e in eye])
        return BisectionEnvironment(cfg.d, cfg.epsilon, lo, hi)
    if cfg.adversary == "simplex_counterexample":
        return SimplexCounterexampleEnvironment(cfg.d, cfg.epsilon, body)
    raise ConfigError(f"unknown adversary {cfg.adversary!r}")


@dataclass
class RoundRow:
    t: int
    u: np.ndarray
    x: float
    side: str
    mistake: object  # bool, or None until theta* is finalized
    n_small: int
    n_t_flag: bool
    min_width: float
    phi_mc: object  # float or None


@dataclass
class RunRecord:
    rows: list
    summary: dict


def _learner_contains(learner, theta):
    geom = learner.knowledge_set
    if isinstance(geom, Polytope):
        return geom.contains(theta, tol=1e-9)
    if isinstance(geom, Ellipsoid):
        return geom.contains(theta, slack=1e-7)
    return True


def run_experiment(cfg, replica=0):
    """One full run; deterministic given (config, seed, replica)."""
    cfg.validate()
    kind = cfg.initial_body_kind or _default_body_kind(cfg.adversary)
    body = initial_body(kind, cfg.d)
    learner = build_learner(cfg, body, replica)
    env = build_environment(cfg, body, kind, replica)
    phi_gen = RngState(cfg.seed).split(replica, _ROLE_PHI).generator()

    rows = []
    terminated = "max_rounds"
    soundness_violations = 0
    confirm = 0
    confirm_flag_violations = 0
    t0 = time.perf_counter()
    for t in range(cfg.max_rounds):
        if env.done:
            terminated = "adversary_done"
            break
        try:
            u = env.next_direction(t, learner)
            if u is None:
                terminated = "adversary_done"
                break
            pred = learner.predict(u)
            out = env.feedback(u, pred.x)
            learner.observe(u, pred.x, out.side)
        except DegenerateBodyError:
            terminated = "degenerate"
            break
        except AdversaryInconsistencyError:
            terminated = "adversary_inconsistent"
            break
        if not env.adaptive and not _learner_contains(learner, env.theta):
            soundness_violations += 1
        phi_val = None
        if cfg.phi_on and hasattr(learner, "state") and learner.state.dim_large > 0:
            phi_val, _ = phi_estimate(learner.state, cfg.phi_samples, phi_gen)
        rows.append(RoundRow(
            t=t, u=np.asarray(u, dtype=np.float64), x=float(pred.x), side=out.side,
            mistake=out.mistake, n_small=int(learner.n_small),
            n_t_flag=bool(pred.n_t_flag),
            min_width=float(learner.min_certified_width),
            phi_mc=phi_val,
        ))
        if learner.converged:
            if pred.n_t_flag:
                confirm_flag_violations += 1
                confirm = 0
            else:
                confirm += 1
            if confirm >= cfg.confirm_rounds:
                terminated = "converged"
                break
        else:
            confirm = 0
    wall = time.perf_counter() - t0

    theta_star = None
    if env.adaptive:
        theta_star = env.finalize()
        for row in rows:
            row.mistake = bool(abs(row.x - float(row.u @ theta_star)) > cfg.epsilon)
    total_regret = sum(1 for row in rows if row.mistake)
    summary = {
        "schema": "v1",
        "config": cfg.to_dict(),
        "replica": replica,
        "rounds": len(rows),
        "total_regret": int(total_regret),
        "terminated_reason": terminated,
        "wall_time_s": wall,
        "soundness_violations": int(soundness_violations),
        "confirm_flag_violations": int(confirm_flag_violations),
        "converged": bool(learner.converged),
        "n_small_final": int(learner.n_small),
        "theta": None if env.adaptive else [float(v) for v in env.theta],
        "theta_star": None if theta_star is None else [float(v) for v in theta_star],
        "adversary_health": getattr(env, "health_events", []),
    }
    return RunRecord(rows=rows, summary=summary)


def run_replicated(cfg):
    """Replica runs with derived seeds plus a deterministic aggregate summary."""
    records = [run_experiment(cfg, replica=r) for r in range(cfg.replicas)]
    regrets = [rec.summary["total_regret"] for rec in records]
    aggregate = {
        "schema": "v1",
        "config": cfg.to_dict(),
        "replicas": cfg.replicas,
        "regret_per_replica": regrets,
        "regret_mean": float(np.mean(regrets)),
        "regret_max": int(np.max(regrets)),
        "soundness_violations": int(sum(r.summary["soundness_violations"] for r in records)),
    }
    return records, aggregate


# ---------------------------------------------------------------------------
# regret-law fitting


def regret_model(model, d, epsilon):
    d = np.asarray(d, dtype=np.float64)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    if model == "d_log":
        return d * np.log(d / epsilon)
    if model == "d2_log":
        return d * d * np.log(1.0 / (epsilon * np.sqrt(d)))
    raise ConfigError(f"unknown regret model {model!r}")


def fit_regret_constant(points, model):
    """Least-squares constant C for regret ~ C * f_model(d, epsilon).

    points: iterables of (d, epsilon, regret) or RunRecords.  Returns
    (C, rms_residual).
    """
    rows = []
    for p in points:
        if isinstance(p, RunRecord):
            c = p.summary["config"]
            rows.append((c["d"], c["epsilon"], p.summary["total_regret"]))
        else:
            rows.append(tuple(p))
    if len(rows) < 4:
        raise ConfigError("need at least 4 (d, regret) points to fit")
    arr = np.asarray(rows, dtype=np.float64)
    f = regret_model(model, arr[:, 0], arr[:, 1])
    y = arr[:, 2]
    denom = float(f @ f)
    if denom <= 0:
        raise ConfigError("degenerate design for regret fit")
    C = float(f @ y) / denom
    residual = float(np.sqrt(np.mean((y - C * f) ** 2)))
    return C, residual


# ---------------------------------------------------------------------------
# emitters (byte-identical across reruns with equal seeds)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float) and not np.isfinite(v):
        return ""
    return repr(float(v))


def emit_csv(record, path):
    lines = [",".join(CSV_COLUMNS)]
    for row in record.rows:
        u_txt = ";".join(repr(float(c)) for c in row.u)
        mistake = "" if row.mistake is None else str(int(bool(row.mistake)))
        lines.append(",".join([
            str(row.t), u_txt, repr(float(row.x)), row.side, mistake,
            str(row.n_small), str(int(row.n_t_flag)), _fmt(row.min_width),
            _fmt(row.phi_mc),
        ]))
    text = "\n".join(lines) + "\n"
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed to write CSV to {path}: {exc}") from exc
    return text


def emit_json(record, path):
    # wall time is the one volatile summary field; dropping it keeps the
    # emitted file byte-identical across reruns with equal seeds
    payload = {k: v for k, v in record.summary.items() if k != "wall_time_s"}
    text = json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n"
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed to write JSON to {path}: {exc}") from exc
    return text
