"""Command-line front end: fit, predict, simulate, benchmark, oracle-check.

Every run writes a ``run.json`` manifest with the fully resolved
configuration and seed; given the manifest and the input files, all
outputs replay byte-identically.  Exit codes: 0 success, 1 usage error,
2 data/validation error, 3 oracle-check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import bench, sampler
from .bench import CsvSource, ExperimentSpec, emit_link_plot, run_experiment, summarize, write_outputs
from .core import GibbsConfig, IndexVector, LinkCoeffs, link_values, make_state
from .data import MODEL_NAMES, NormalizationParams, SyntheticSpec, load_csv, normalize, simulate
from .validate import posterior_oracle_check

__all__ = ["main", "console_main"]

MODEL_SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(v):
    return repr(float(v))


def _write_run_manifest(outdir, payload):
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "run.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _gibbs_from_args(args, extra=None):
    cfg = dict(extra or {})
    if getattr(args, "lambda_", None) is not None:
        cfg["lambda_"] = args.lambda_
    for key in ("steps", "chains", "seed", "s", "delta"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "C", None) is not None:
        cfg["C"] = args.C
    ws = getattr(args, "warm_start", None)
    if ws is not None:
        cfg["warm_start"] = {"lasso": "lasso_direction"}.get(ws, ws)
    return cfg


def _config_payload(cfg, n):
    return {
        "lambda": cfg.resolve_lambda(n),
        "C": cfg.C,
        "s": cfg.s,
        "delta": cfg.delta,
        "steps": cfg.steps,
        "chains": cfg.chains,
        "seed": cfg.seed,
        "warm_start": cfg.warm_start,
    }


def _cmd_fit(args):
    raw = load_csv(args.input, args.target)
    train, params = normalize(raw, raw)
    overrides = _gibbs_from_args(args)
    overrides.setdefault("steps", 1000 if train.p <= 10 else 5000)
    overrides.setdefault("warm_start", "none" if train.p <= 10 else "hhi")
    cfg = GibbsConfig(**overrides)
    state, diag = sampler.fit(train, cfg)

    with open(args.input, newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh))]
    features = [h for h in header if h != args.target]

    model = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "target": args.target,
        "feature_names": features,
        "normalization": {
            "x_min": params.x_min.tolist(),
            "x_max": params.x_max.tolist(),
            "y_scale": params.y_scale,
        },
        "index_values": state.index.values.tolist(),
        "support": state.index.support.tolist(),
        "beta": state.link.beta.tolist(),
        "m": state.link.m,
        "risk": state.risk,
        "config": _config_payload(cfg, train.n),
        "diagnostics": {
            "final_risks": diag.final_risks,
            "accept_rates": diag.accept_rates,
            "stabilized": diag.stabilized,
            "best_chain": diag.best_chain,
            "warm_start_fallback": diag.warm_start_fallback,
        },
    }
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, f"{args.name}_model.json")
    with open(model_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model, fh, indent=2)
        fh.write("\n")
    plot_path = os.path.join(args.out, f"{args.name}_linkplot.csv")
    emit_link_plot(state, train, plot_path)
    _write_run_manifest(
        args.out,
        {
            "subcommand": "fit",
            "input": os.path.abspath(args.input),
            "target": args.target,
            "name": args.name,
            "config": _config_payload(cfg, train.n),
            "outputs": [os.path.basename(model_path), os.path.basename(plot_path)],
        },
    )
    print(f"model={model_path}")
    print(f"final_risk={state.risk!r}")
    print(f"support={state.index.support.tolist()} m={state.link.m}")
    return 0


def _load_model(path):
    with open(path, encoding="utf-8") as fh:
        model = json.load(fh)
    if model.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema: {model.get('schema_version')!r}")
    return model


def _state_from_model(model, data):
    index = IndexVector(np.asarray(model["index_values"]))
    link = LinkCoeffs(np.asarray(model["beta"]))
    return make_state(data, index, link)


def _cmd_predict(args):
    model = _load_model(args.model)
    with open(args.input, newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh))]
    features = [h for h in header if h != model["target"]]
    if features != model["feature_names"]:
        raise ValueError(
            f"feature columns {features} do not match the model's "
            f"{model['feature_names']}"
        )
    raw = load_csv(args.input, model["target"])
    params = NormalizationParams(
        x_min=np.asarray(model["normalization"]["x_min"]),
        x_max=np.asarray(model["normalization"]["x_max"]),
        y_scale=float(model["normalization"]["y_scale"]),
    )
    data = params.apply(raw)
    index = IndexVector(np.asarray(model["index_values"]))
    link = LinkCoeffs(np.asarray(model["beta"]))
    preds = link_values(link, data.x @ index.values)
    mse = float(np.mean((preds - data.y) ** 2))

    os.makedirs(args.out, exist_ok=True)
    pred_path = os.path.join(args.out, f"{args.name}_predictions.csv")
    with open(pred_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("prediction\n")
        for v in preds:
            fh.write(_fmt(v) + "\n")
    _write_run_manifest(
        args.out,
        {
            "subcommand": "predict",
            "input": os.path.abspath(args.input),
            "model": os.path.abspath(args.model),
            "name": args.name,
            "outputs": [os.path.basename(pred_path)],
        },
    )
    print(f"predictions={pred_path}")
    print(f"test_mse={mse!r}")
    return 0


def _cmd_simulate(args):
    seed = args.seed if args.seed is not None else 0
    spec = SyntheticSpec(model=args.model, n=args.n, p=args.p, sigma=args.sigma, seed=seed)
    data = simulate(spec)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{args.name}.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join([f"x{j + 1}" for j in range(data.p)] + ["y"]) + "\n")
        for i in range(data.n):
            cells = [_fmt(v) for v in data.x[i]] + [_fmt(data.y[i])]
            fh.write(",".join(cells) + "\n")
    _write_run_manifest(
        args.out,
        {
            "subcommand": "simulate",
            "spec": {
                "model": spec.model,
                "n": spec.n,
                "p": spec.p,
                "sigma": spec.sigma,
                "seed": spec.seed,
            },
            "name": args.name,
            "outputs": [os.path.basename(path)],
        },
    )
    print(f"dataset={path}")
    return 0


def _experiment_from_toml(payload, override_seed=None):
    src = payload.get("source")
    if not isinstance(src, dict) or "type" not in src:
        raise ValueError("config needs a [source] table with a 'type' key")
    if src["type"] == "synthetic":
        source = SyntheticSpec(
            model=src.get("model", "si"),
            n=int(src.get("n", 100)),
            p=int(src.get("p", 10)),
            sigma=float(src.get("sigma", 0.2)),
        )
    elif src["type"] == "csv":
        source = CsvSource(
            path=src["path"],
            target=src["target"],
            augment=bool(src.get("augment", False)),
            factor=int(src.get("factor", 4)),
        )
    else:
        raise ValueError(f"unknown source type {src['type']!r}")
    gibbs = dict(payload.get("gibbs", {}))
    if "lambda" in gibbs:
        gibbs["lambda_"] = float(gibbs.pop("lambda"))
    if "warm_start" in gibbs:
        gibbs["warm_start"] = {"lasso": "lasso_direction"}.get(
            gibbs["warm_start"], gibbs["warm_start"]
        )
    spec = ExperimentSpec(
        source=source,
        methods=tuple(payload.get("methods", bench.METHOD_ORDER)),
        repetitions=int(payload.get("repetitions", 20)),
        seed=int(override_seed if override_seed is not None else payload.get("seed", 0)),
        gibbs=gibbs,
    )
    return spec, payload.get("name", "experiment")


def _cmd_benchmark(args):
    with open(args.config, "rb") as fh:
        payload = tomllib.load(fh)
    spec, name = _experiment_from_toml(payload, override_seed=args.seed)
    if args.name:
        name = args.name
    rows = run_experiment(spec)
    summary_path, raw_path = write_outputs(name, rows, args.out)
    outputs = [os.path.basename(summary_path), os.path.basename(raw_path)]
    if "fourier" in spec.methods:
        cache = None
        if isinstance(spec.source, CsvSource):
            cache = load_csv(spec.source.path, spec.source.target)
        train, _, _ = bench._prepare_repetition(spec, 0, cache)
        state, _ = sampler.fit(train, bench._gibbs_config(spec, train, 0))
        plot_path = os.path.join(args.out, f"{name}_linkplot.csv")
        emit_link_plot(state, train, plot_path)
        outputs.append(os.path.basename(plot_path))
    _write_run_manifest(
        args.out,
        {
            "subcommand": "benchmark",
            "config": os.path.abspath(args.config),
            "name": name,
            "seed": spec.seed,
            "methods": list(spec.methods),
            "repetitions": spec.repetitions,
            "outputs": outputs,
        },
    )
    print(summarize(rows, format="markdown"))
    return 0


def _cmd_oracle_check(args):
    report = posterior_oracle_check(
        p=args.p,
        n=args.n,
        lambda_=args.lambda_ if args.lambda_ is not None else 10.0,
        C=args.C if args.C is not None else 1e100,
        chain_steps=args.steps if args.steps is not None else 200_000,
        draws=args.draws,
        seed=args.seed if args.seed is not None else 20240501,
    )
    for line in report.lines():
        print(line)
    return 0 if report.passed else 3


def _build_parser():
    parser = _Parser(prog="sparseindex", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(sp):
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None)

    fit_p = sub.add_parser("fit", help="fit the Gibbs-posterior estimator to a CSV")
    fit_p.add_argument("input")
    fit_p.add_argument("--target", required=True)
    fit_p.add_argument("--name", default="fit")
    fit_p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    fit_p.add_argument("--steps", type=int, default=None)
    fit_p.add_argument("--chains", type=int, default=None)
    fit_p.add_argument("--warm-start", dest="warm_start", choices=["none", "hhi", "lasso"], default=None)
    fit_p.add_argument("--c", dest="C", type=float, default=None)
    fit_p.add_argument("--s", dest="s", type=float, default=None)
    fit_p.add_argument("--delta", dest="delta", type=float, default=None)
    add_common(fit_p)
    fit_p.set_defaults(func=_cmd_fit)

    pred_p = sub.add_parser("predict", help="apply a saved model to new rows")
    pred_p.add_argument("input")
    pred_p.add_argument("--model", required=True)
    pred_p.add_argument("--name", default="predict")
    add_common(pred_p)
    pred_p.set_defaults(func=_cmd_predict)

    sim_p = sub.add_parser("simulate", help="write a synthetic dataset CSV")
    sim_p.add_argument("--model", choices=list(MODEL_NAMES), required=True)
    sim_p.add_argument("--n", type=int, required=True)
    sim_p.add_argument("--p", type=int, required=True)
    sim_p.add_argument("--sigma", type=float, default=0.2)
    sim_p.add_argument("--name", default="synthetic")
    add_common(sim_p)
    sim_p.set_defaults(func=_cmd_simulate)

    bench_p = sub.add_parser("benchmark", help="run an experiment table from a TOML config")
    bench_p.add_argument("--config", required=True)
    bench_p.add_argument("--name", default=None)
    add_common(bench_p)
    bench_p.set_defaults(func=_cmd_benchmark)

    orc_p = sub.add_parser("oracle-check", help="validate the chain against importance sampling")
    orc_p.add_argument("--p", type=int, default=3)
    orc_p.add_argument("--n", type=int, default=30)
    orc_p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    orc_p.add_argument("--c", dest="C", type=float, default=None)
    orc_p.add_argument("--steps", type=int, default=None)
    orc_p.add_argument("--draws", type=int, default=1_000_000)
    add_common(orc_p)
    orc_p.set_defaults(func=_cmd_oracle_check)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
