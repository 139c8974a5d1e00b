"""Command-line entry point: ``addq <subcommand> [config] [--output DIR] [--jobs N] [--seed-offset K]``.

Exit codes: 0 success, 1 configuration or usage error, 2 a theory check failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from .. import oracle, theory
from ..agents import BETA_PRESETS
from ..distmeasure import Support
from .config import AlgorithmConfig, ConfigError, EnvironmentConfig, ExperimentConfig, RepresentationConfig, read_yaml
from .report import aggregate, write_report
from .runner import FLOAT_FMT, read_run, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2

COMPARE_GRID = (
    [AlgorithmConfig("maxmin", ensemble=k) for k in (2, 4, 6, 8)]
    + [AlgorithmConfig("ebql", ensemble=k) for k in (3, 7, 10, 15)]
    + [AlgorithmConfig("redq", ensemble=k, subset=n) for k, n in ((3, 1), (3, 2), (5, 1), (5, 2))]
    + [AlgorithmConfig("wdq", c=10.0)]
)

DEFAULT_THEORY = {
    "variance_law": [{"k": 5, "sigma": 1.0, "N": 30, "replicates": 2000, "seed": 0}],
    "bias_bound": [
        {"gamma": 0.9, "sigma": 5.0, "k": 5, "N": 100, "replicates": 2000, "seed": 1},
        {"gamma": 0.9, "sigma": 1.0, "k": 20, "N": 25, "replicates": 2000, "seed": 2},
    ],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="addq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "run": "run one experiment config over its seeds",
        "verify-theory": "Monte Carlo checks of the bias bound and the sample-variance law",
        "oracle": "write Q*, the categorical fixed point and the model table",
        "model-dump": "print the transition table of an environment",
        "ablate": "sweep the named beta schedules (plus WDQ) on one base config",
        "compare": "run the Maxmin/EBQL/REDQ/WDQ grid on one base config",
        "report": "aggregate the per-seed CSVs of a run directory",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        target = "run_dir" if name == "report" else "config_file"
        sp.add_argument(target, nargs="?", default=None)
        sp.add_argument("--config", dest="config_flag", default=None, help="same as the positional argument")
        sp.add_argument("--output", default=None, help="output directory (overrides output_dir)")
        sp.add_argument("--jobs", type=int, default=1, help="seeds run in parallel")
        sp.add_argument("--seed-offset", type=int, default=0, help="added to every configured seed")
    return p


def _config_path(args) -> str:
    path = getattr(args, "config_file", None) or args.config_flag
    if path is None:
        raise ConfigError("a config file is required")
    return path


def _experiment(args) -> tuple[ExperimentConfig, dict]:
    data = read_yaml(_config_path(args))
    extra = {k: data.pop(k) for k in ("sweep",) if k in data}
    cfg = ExperimentConfig.from_dict(data)
    if args.output:
        cfg = cfg.with_(output_dir=args.output)
    return cfg, extra


def cmd_run(args) -> int:
    cfg, _ = _experiment(args)
    records = run_experiment(cfg, jobs=args.jobs, seed_offset=args.seed_offset, output_dir=cfg.output_dir)
    final = aggregate(records).series("summed_abs_bias")[0][-1]
    print(f"{cfg.algorithm.label()}: {len(records)} seeds -> {cfg.output_dir} (final summed |bias| {final:.4f})")
    return EXIT_OK


def _sweep(args, variants: list[AlgorithmConfig], table_name: str) -> int:
    base, _ = _experiment(args)
    out = Path(base.output_dir)
    rows = ["variant,final_summed_abs_bias_mean,final_summed_abs_bias_stderr,mean_summed_abs_bias,final_correct_action"]
    for alg in variants:
        rep = base.representation
        if alg.name in ("maxmin", "ebql", "redq", "wdq", "ql", "dql", "clipped"):
            rep = RepresentationConfig("scalar")
        elif rep.kind == "scalar":
            rep = RepresentationConfig("categorical")
        cfg = base.with_(algorithm=alg, representation=rep, output_dir=str(out / alg.label()))
        records = run_experiment(cfg, jobs=args.jobs, seed_offset=args.seed_offset, output_dir=cfg.output_dir)
        summary = write_report(cfg.output_dir, records)
        mean, se = summary.series("summed_abs_bias")
        correct = summary.series("correct_action")[0][-1]
        rows.append(",".join([alg.label()] + [format(v, FLOAT_FMT) for v in (mean[-1], se[-1], mean.mean(), correct)]))
        print(rows[-1])
    (out / table_name).write_text("\n".join(rows) + "\n")
    print(f"table -> {out / table_name}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    _, extra = _experiment(args)
    sweep = extra.get("sweep") or {}
    names = sweep.get("schedules", list(BETA_PRESETS))
    variants = [AlgorithmConfig("addq", beta_schedule=n) for n in names]
    if sweep.get("include_wdq", True):
        variants.append(AlgorithmConfig("wdq", c=float(sweep.get("wdq_c", 10.0))))
    return _sweep(args, variants, "ablation.csv")


def cmd_compare(args) -> int:
    _, extra = _experiment(args)
    variants = list(COMPARE_GRID)
    if (extra.get("sweep") or {}).get("include_addq", True):
        variants.append(AlgorithmConfig("addq", beta_schedule="n3"))
    return _sweep(args, variants, "compare.csv")


def cmd_report(args) -> int:
    run_dir = args.run_dir or args.config_flag
    if run_dir is None:
        raise ConfigError("report needs a run directory")
    try:
        records = read_run(run_dir)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc
    summary = write_report(run_dir, records)
    mean, se = summary.series("summed_abs_bias")
    print(f"{summary.n_seeds} seeds, {len(summary.steps)} evaluation points; final summed |bias| {mean[-1]:.4f} +- {se[-1]:.4f}")
    return EXIT_OK


def _environment(args) -> tuple[EnvironmentConfig, RepresentationConfig | None, dict]:
    data = read_yaml(_config_path(args))
    env = dict(data.get("environment", data))
    kind = env.pop("kind", "gridworld")
    rep = data.get("representation")
    try:
        rep_cfg = RepresentationConfig(**rep) if rep else None
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return EnvironmentConfig(kind, env), rep_cfg, data


def cmd_model_dump(args) -> int:
    env, _, _ = _environment(args)
    text = env.build().dump()
    if args.output:
        Path(args.output).mkdir(parents=True, exist_ok=True)
        (Path(args.output) / "model.tsv").write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    env, rep, data = _environment(args)
    model = env.build()
    out = Path(args.output or data.get("output_dir") or "oracle")
    out.mkdir(parents=True, exist_ok=True)
    q = oracle.value_iteration(model)
    oracle.write_qstar_tsv(out / "qstar.tsv", model, q)
    (out / "model.tsv").write_text(model.dump())
    print((out / "qstar.tsv").read_text(), end="")
    if model.finite_rewards:
        rep = rep or RepresentationConfig("categorical")
        if rep.kind == "categorical":
            support = Support(float(rep.theta_min), float(rep.theta_max), int(rep.m))
            eta = oracle.categorical_fixed_point(model, oracle.greedy_policy(model, q), support)
            oracle.write_eta_tsv(out / "eta_c.tsv", model, support, eta)
    return EXIT_OK


def _theory_config(args) -> dict:
    path = getattr(args, "config_file", None) or args.config_flag
    data = read_yaml(path) if path else dict(DEFAULT_THEORY)
    unknown = set(data) - {"variance_law", "bias_bound", "output_dir"}
    if unknown:
        raise ConfigError(f"unknown theory config keys: {sorted(unknown)}")
    return data


def cmd_verify_theory(args) -> int:
    data = _theory_config(args)
    out = Path(args.output or data.get("output_dir") or "theory")
    out.mkdir(parents=True, exist_ok=True)
    lines, raw = [], ["suite,case,replicate,value"]
    ok = True
    try:
        for i, c in enumerate(data.get("variance_law", [])):
            r = theory.verify_variance_law(int(c["k"]), float(c["sigma"]), int(c["N"]), int(c["replicates"]), int(c["seed"]))
            ok &= r.passed
            lines += [
                f"[variance_law {i}] config {yaml.safe_dump(c, default_flow_style=True).strip()}",
                f"  KS D = {r.statistic:.6f}  p = {r.p_value:.6f}",
                f"  mean {r.mean:.6f} (expect {r.expected_mean:.6f}, 3se {3 * r.mean_stderr:.6f})",
                f"  variance {r.variance:.6f} (expect {r.expected_variance:.6f}, 3se {3 * r.variance_stderr:.6f})",
                f"  {'PASS' if r.passed else 'FAIL'}",
            ]
            raw += [f"s2,{i},{j},{v:.17g}" for j, v in enumerate(r.samples)]
        for i, c in enumerate(data.get("bias_bound", [])):
            b = theory.verify_bias_bound(
                float(c.get("gamma", 0.9)), float(c["sigma"]), int(c["k"]), int(c["N"]), int(c["replicates"]), int(c["seed"])
            )
            ok &= b.passed
            lines += [
                f"[bias_bound {i}] config {yaml.safe_dump(c, default_flow_style=True).strip()}",
                f"  mean bias {b.empirical_mean_bias:.6f}  stderr {b.stderr:.6f}  bound {b.lower_bound:.6f}",
                f"  {'PASS' if b.passed else 'FAIL'}",
            ]
            raw += [f"q_hat,{i},{j},{v:.17g}" for j, v in enumerate(b.samples)]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad theory config: {exc}") from exc
    lines.append("ALL PASS" if ok else "SOME CHECKS FAILED")
    (out / "theory_report.txt").write_text("\n".join(lines) + "\n")
    (out / "theory_replicates.csv").write_text("\n".join(raw) + "\n")
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "run": cmd_run,
    "verify-theory": cmd_verify_theory,
    "oracle": cmd_oracle,
    "model-dump": cmd_model_dump,
    "ablate": cmd_ablate,
    "compare": cmd_compare,
    "report": cmd_report,
}


def cli(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    np.seterr(all="ignore")
    sys.exit(cli())


if __name__ == "__main__":
    main()
