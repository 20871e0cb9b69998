"""Command-line interface: run / sweep / fit / verify.

Exit codes: 0 success, 1 property or fit failure, 2 configuration error.
Config files are flat UTF-8 key=value lines (keys match the long flag
names); explicit CLI flags win over file values.
"""

import argparse
import itertools
import json
import os
import sys

from .harness import (
    ADVERSARIES,
    DELTA_POLICIES,
    LEARNERS,
    ConfigError,
    ExperimentConfig,
    emit_csv,
    emit_json,
    fit_regret_constant,
    run_experiment,
    run_replicated,
)
from .verify import ALL_SUITES


def _parse_config_file(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, val = line.partition("=")
                values[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _coerce(key, val):
    ints = {"d", "rounds", "seed", "replicas", "sampler_burn_in", "sampler_thinning",
            "sampler_n", "phi_samples", "n_probe", "confirm_rounds"}
    floats = {"epsilon", "delta"}
    bools = {"phi", "adapt_samples", "sampler_rounding"}
    if key in ints:
        return int(val)
    if key in floats:
        return float(val)
    if key in bools:
        return str(val).lower() in ("1", "true", "yes", "on")
    return val


def _experiment_config(args, file_values):
    merged = dict(file_values)
    for key in ("d", "epsilon", "delta", "delta_policy", "learner", "adversary",
                "rounds", "seed", "replicas", "initial_body", "sampler_burn_in",
                "sampler_thinning", "sampler_n", "adapt_samples", "phi", "phi_samples",
                "n_probe"):
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
    coerced = {k: _coerce(k, v) for k, v in merged.items()}
    if "d" not in coerced or "epsilon" not in coerced:
        raise ConfigError("--d and --epsilon are required (flag or config file)")
    cfg = ExperimentConfig(
        d=coerced["d"],
        epsilon=coerced["epsilon"],
        learner=coerced.get("learner", "projected_volume"),
        adversary=coerced.get("adversary", "fixed_random"),
        delta_policy=coerced.get("delta_policy", "explicit" if "delta" in coerced else "practical"),
        delta=coerced.get("delta"),
        max_rounds=coerced.get("rounds", 1000),
        seed=coerced.get("seed", 0),
        replicas=coerced.get("replicas", 1),
        initial_body_kind=coerced.get("initial_body"),
        sampler_burn_in=coerced.get("sampler_burn_in"),
        sampler_thinning=coerced.get("sampler_thinning"),
        sampler_n=coerced.get("sampler_n"),
        adapt_samples=coerced.get("adapt_samples"),
        phi_on=coerced.get("phi", False),
        phi_samples=coerced.get("phi_samples", 2000),
        n_probe=coerced.get("n_probe", 32),
    )
    return cfg.validate()


def _add_experiment_flags(p):
    p.add_argument("--config", help="flat key=value config file; flags win")
    p.add_argument("--d", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float, help="explicit thin-direction threshold")
    p.add_argument("--delta-policy", dest="delta_policy", choices=DELTA_POLICIES)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--initial-body", dest="initial_body",
                   choices=("inscribed_cube", "unit_box_scaled"))
    p.add_argument("--sampler-burn-in", dest="sampler_burn_in", type=int)
    p.add_argument("--sampler-thinning", dest="sampler_thinning", type=int)
    p.add_argument("--sampler-n", dest="sampler_n", type=int)
    p.add_argument("--adapt-samples", dest="adapt_samples", action="store_const", const=True)
    p.add_argument("--phi", action="store_const", const=True,
                   help="log an MC estimate of the projected volume each round")
    p.add_argument("--n-probe", dest="n_probe", type=int)


def _cmd_run(args):
    file_values = _parse_config_file(args.config) if args.config else {}
    for key in ("learner", "adversary"):
        if getattr(args, key) is not None:
            file_values[key] = getattr(args, key)
    cfg = _experiment_config(args, file_values)
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    out = args.out
    if cfg.replicas == 1:
        record = run_experiment(cfg)
        records = [(record, "")]
        print(f"regret={record.summary['total_regret']} rounds={record.summary['rounds']} "
              f"terminated={record.summary['terminated_reason']}")
    else:
        recs, aggregate = run_replicated(cfg)
        records = [(rec, f"_r{i}") for i, rec in enumerate(recs)]
        print(f"replicas={cfg.replicas} regret={aggregate['regret_per_replica']} "
              f"mean={aggregate['regret_mean']:.2f}")
        if out:
            with open(f"{out}_aggregate.json", "w", encoding="utf-8") as fh:
                json.dump(aggregate, fh, sort_keys=True, indent=2)
    if out:
        for rec, suffix in records:
            if "csv" in formats:
                emit_csv(rec, f"{out}{suffix}.csv")
            if "json" in formats:
                emit_json(rec, f"{out}{suffix}.json")
    return 0


def _csv_list(text, cast):
    return [cast(tok) for tok in text.split(",") if tok.strip()]


def _cmd_sweep(args):
    os.makedirs(args.out, exist_ok=True)
    ds = _csv_list(args.d, int)
    epss = _csv_list(args.epsilon, float)
    learners = _csv_list(args.learner, str)
    adversaries = _csv_list(args.adversary, str)
    summaries = []
    for d, eps, learner, adversary, seed in itertools.product(
            ds, epss, learners, adversaries, range(args.seeds)):
        cfg = ExperimentConfig(
            d=d, epsilon=eps, learner=learner, adversary=adversary,
            max_rounds=args.rounds, seed=args.seed + seed,
            delta_policy="explicit" if args.delta is not None else "practical",
            delta=args.delta,
            sampler_burn_in=args.sampler_burn_in,
            sampler_thinning=args.sampler_thinning,
            sampler_n=args.sampler_n,
        ).validate()
        record = run_experiment(cfg)
        stem = f"run_{learner}_{adversary}_d{d}_eps{eps:g}_seed{args.seed + seed}"
        emit_csv(record, os.path.join(args.out, stem + ".csv"))
        emit_json(record, os.path.join(args.out, stem + ".json"))
        summaries.append({
            "file": stem, "d": d, "epsilon": eps, "learner": learner,
            "adversary": adversary, "seed": args.seed + seed,
            "total_regret": record.summary["total_regret"],
            "rounds": record.summary["rounds"],
            "terminated_reason": record.summary["terminated_reason"],
            "soundness_violations": record.summary["soundness_violations"],
        })
        print(f"{stem}: regret={record.summary['total_regret']}")
    with open(os.path.join(args.out, "sweep_summary.json"), "w", encoding="utf-8") as fh:
        json.dump({"schema": "v1", "runs": summaries}, fh, sort_keys=True, indent=2)
    with open(os.path.join(args.out, "sweep_summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("d,epsilon,learner,adversary,seed,total_regret,rounds,terminated_reason\n")
        for s in summaries:
            fh.write(f"{s['d']},{s['epsilon']!r},{s['learner']},{s['adversary']},"
                     f"{s['seed']},{s['total_regret']},{s['rounds']},{s['terminated_reason']}\n")
    return 0


def _cmd_fit(args):
    path = os.path.join(args.sweep_dir, "sweep_summary.json")
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    points = [(r["d"], r["epsilon"], r["total_regret"]) for r in payload["runs"]
              if args.learner in (None, r["learner"])]
    if not points:
        raise ConfigError("no matching runs in the sweep summary")
    results = {}
    for model in ("d_log", "d2_log"):
        C, resid = fit_regret_constant(points, model)
        results[model] = (C, resid)
        print(f"{model}: C={C:.4f} rms_residual={resid:.4f}")
    preferred = min(results, key=lambda mdl: results[mdl][1])
    print(f"preferred: {preferred}")
    return 0


def _cmd_verify(args):
    failures = 0
    for fn in ALL_SUITES:
        res = fn()
        print(res.line())
        failures += 0 if res.passed else 1
    return 1 if failures else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="projvol",
        description="Projected-volume multidimensional binary search: experiments and checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single experiment")
    _add_experiment_flags(p_run)
    p_run.add_argument("--learner", choices=LEARNERS)
    p_run.add_argument("--adversary", choices=ADVERSARIES)
    p_run.add_argument("--out", help="output path stem (writes <out>.csv / <out>.json)")
    p_run.add_argument("--format", default="csv,json")
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid of runs over d/epsilon/learner/adversary")
    p_sweep.add_argument("--d", required=True, help="comma list, e.g. 2,3,4")
    p_sweep.add_argument("--epsilon", required=True, help="comma list, e.g. 0.05,0.01")
    p_sweep.add_argument("--learner", default="projected_volume")
    p_sweep.add_argument("--adversary", default="fixed_random")
    p_sweep.add_argument("--seeds", type=int, default=10)
    p_sweep.add_argument("--seed", type=int, default=0, help="base seed")
    p_sweep.add_argument("--rounds", type=int, default=3000)
    p_sweep.add_argument("--delta", type=float)
    p_sweep.add_argument("--sampler-burn-in", dest="sampler_burn_in", type=int)
    p_sweep.add_argument("--sampler-thinning", dest="sampler_thinning", type=int)
    p_sweep.add_argument("--sampler-n", dest="sampler_n", type=int)
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_fit = sub.add_parser("fit", help="fit regret growth laws over a sweep directory")
    p_fit.add_argument("--sweep-dir", required=True)
    p_fit.add_argument("--learner", default=None, help="restrict to one learner")
    p_fit.set_defaults(fn=_cmd_fit)

    p_verify = sub.add_parser("verify", help="run the property-oracle suites")
    p_verify.set_defaults(fn=_cmd_verify)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
