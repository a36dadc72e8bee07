"""Command-line front end.

Subcommands:

* ``run``           simulate one strategy over the configured seeds
* ``compare``       aggregate results from several run directories
* ``gen-synth``     write a synthetic blob dataset (JSONL + FMAT)
* ``analyze``       recompute batch diagnostics for a finished run
* ``export-scores`` collect per-candidate score dumps from a run

Configuration is a flat ``key = value`` text file (``#`` starts a comment);
any value can be overridden by a CLI flag. See the README for the key list.
"""

import argparse
import glob
import json
import os
import sys

from . import harness
from .acquisition import AcquisitionConfig
from .classifier import ClassifierConfig
from .dataset import save_jsonl, write_feature_matrix
from .errors import AlsimError, ConfigError
from .seeding import derive_rng

_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def parse_config_file(path) -> dict:
    """Read ``key = value`` lines into a string map."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _to_bool(value: str, key: str) -> bool:
    try:
        return _BOOL[value.lower()]
    except KeyError:
        raise ConfigError(f"{key} must be a boolean, got {value!r}") from None


def build_loop_config(kv: dict) -> harness.LoopConfig:
    """Turn a flat key-value map into a LoopConfig."""
    kv = dict(kv)
    feature_paths = {}
    if "features" in kv:
        feature_paths[kv.get("input_space", "features")] = kv.pop("features")
    for key in list(kv):
        if key.startswith("space."):
            feature_paths[key[len("space."):]] = kv.pop(key)

    def take(key, cast, default):
        if key not in kv:
            return default
        value = kv.pop(key)
        if cast is bool:
            return _to_bool(value, key)
        try:
            return cast(value)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r}") from None

    seeds = kv.pop("seeds", None)
    if seeds is not None:
        try:
            seeds = tuple(int(s) for s in seeds.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"seeds: cannot parse {seeds!r}") from None
    else:
        seeds = (1, 2, 3, 4, 5)

    acq = AcquisitionConfig(
        strategy=kv.pop("strategy", "cal"),
        b=1,  # the loop derives b from acquisition_fraction
        k=take("k", int, 10),
        cal_direction=kv.pop("cal_direction", "argmax"),
        cal_pooling=kv.pop("cal_pooling", "mean"),
        cal_scoring=kv.pop("cal_scoring", "kl"),
        cal_neighborhood=kv.pop("cal_neighborhood", "per_unlabeled"),
        encoding=kv.pop("encoding", "model"),
        add_distance_term=take("add_distance_term", bool, False),
        normalize_kmeans=take("normalize_kmeans", bool, True),
    )
    clf = ClassifierConfig(
        hidden_dim=take("hidden_dim", int, 0),
        learning_rate=take("learning_rate", float, 0.1),
        epochs=take("epochs", int, 30),
        batch_size=take("batch_size", int, 32),
        evals_per_epoch=take("evals_per_epoch", int, 5),
        l2_penalty=take("l2_penalty", float, 1e-4),
    )
    config = harness.LoopConfig(
        budget_fraction=take("budget_fraction", float, 0.15),
        init_fraction=take("init_fraction", float, 0.01),
        acquisition_fraction=take("acquisition_fraction", float, 0.02),
        seeds=seeds,
        acquisition=acq,
        classifier=clf,
        dataset_path=kv.pop("dataset", None),
        n_classes=take("classes", int, None),
        feature_paths=feature_paths,
        input_space=kv.pop("input_space", "features"),
        tfidf_min_df=take("tfidf_min_df", int, None),
        representativeness_k=take("representativeness_k", int, 10),
        compute_diagnostics=take("diagnostics", bool, True),
        dump_scores=take("dump_scores", bool, False),
    )
    if kv:
        raise ConfigError(f"unknown config keys: {sorted(kv)}")
    return config


def loop_config_from_echo(echo: dict) -> harness.LoopConfig:
    """Rebuild a LoopConfig from the config.json echo of a finished run."""
    echo = dict(echo)
    acq = AcquisitionConfig(**echo.pop("acquisition"))
    clf = ClassifierConfig(**echo.pop("classifier"))
    echo["seeds"] = tuple(echo["seeds"])
    return harness.LoopConfig(acquisition=acq, classifier=clf, **echo)


def _cmd_run(args) -> int:
    kv = parse_config_file(args.config) if args.config else {}
    if args.strategy:
        kv["strategy"] = args.strategy
    if args.seed is not None:
        kv["seeds"] = str(args.seed)
    if args.dump_scores:
        kv["dump_scores"] = "true"
    config = build_loop_config(kv)
    result = harness.run_simulation(config)
    harness.write_run(result, args.out)
    report = harness.compare([result])
    print(report.summary())
    print(f"run written to {args.out}")
    return 0


def _load_run(run_dir) -> harness.RunResult:
    path = os.path.join(run_dir, "results.jsonl")
    with open(os.path.join(run_dir, "config.json"), "r", encoding="utf-8") as fh:
        echo = json.load(fh)
    per_seed: dict[int, harness.SeedResult] = {}
    strategy = echo["acquisition"]["strategy"]
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            seed = obj["seed"]
            sr = per_seed.setdefault(seed, harness.SeedResult(
                seed=seed, records=[], final_labeled_ids=[]))
            if "iteration" in obj:
                diag = obj.get("diagnostics")
                diagnostics = None
                if diag is not None:
                    def undo(name):
                        if diag.get(name + "_infinite"):
                            return float("inf")
                        return diag.get(name)
                    diagnostics = harness.analysis.BatchDiagnostics(
                        div_input=undo("div_input"), div_feature=undo("div_feature"),
                        uncertainty=undo("uncertainty"),
                        representativeness=undo("representativeness"))
                sr.records.append(harness.IterationRecord(
                    iteration=obj["iteration"], labeled_size=obj["labeled_size"],
                    test_accuracy=obj["test_accuracy"], val_loss=obj["val_loss"],
                    diagnostics=diagnostics, inference_seconds=0.0,
                    selection_seconds=0.0, acquired_ids=obj["acquired_ids"]))
            elif "partial" in obj:
                sr.error = obj["error"]
            else:
                sr.final_uncertainty = obj.get("final_uncertainty")
                sr.final_labeled_ids = [""] * obj.get("final_labeled_size", 0)
    timing_path = os.path.join(run_dir, "timing.csv")
    if os.path.exists(timing_path):
        # timings are excluded from results.jsonl (determinism contract)
        with open(timing_path, "r", encoding="utf-8") as fh:
            next(fh, None)
            for line in fh:
                _, seed, iteration, inf_s, sel_s = line.rstrip("\n").split(",")
                sr = per_seed.get(int(seed))
                if sr is not None and int(iteration) < len(sr.records):
                    rec = sr.records[int(iteration)]
                    rec.inference_seconds = float(inf_s)
                    rec.selection_seconds = float(sel_s)
    return harness.RunResult(config=echo, strategy=strategy,
                             seed_results=list(per_seed.values()))


def _cmd_compare(args) -> int:
    run_dirs = sorted(d for d in glob.glob(args.runs) if os.path.isdir(d))
    if not run_dirs:
        raise ConfigError(f"no run directories match {args.runs!r}")
    results = [_load_run(d) for d in run_dirs]
    report = harness.compare(results)
    print(report.summary())
    if args.out:
        harness.write_comparison(report, args.out)
        print(f"comparison written to {args.out}")
    return 0


def _cmd_gen_synth(args) -> int:
    rng = derive_rng(args.seed, "synth")
    store, matrix = harness.generate_synthetic(
        classes=args.classes, per_class=args.per_class, dim=args.dim,
        separation=args.separation, rng=rng)
    save_jsonl(store, args.out + ".jsonl")
    write_feature_matrix(matrix, args.out + ".fmat")
    print(f"wrote {args.out}.jsonl and {args.out}.fmat "
          f"({len(store)} examples, dim {matrix.cols})")
    return 0


def _cmd_analyze(args) -> int:
    with open(os.path.join(args.run, "config.json"), "r", encoding="utf-8") as fh:
        config = loop_config_from_echo(json.load(fh))
    run = _load_run(args.run)
    rows = harness.recompute_diagnostics(config, run)
    out_path = args.out or os.path.join(args.run, "diagnostics.csv")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("strategy,seed,iteration,div_input,div_feature,"
                 "uncertainty,representativeness\n")
        for row in rows:
            fh.write(",".join(str("" if v is None else v) for v in row) + "\n")
    print(f"diagnostics written to {out_path}")
    return 0


def _cmd_export_scores(args) -> int:
    paths = sorted(glob.glob(os.path.join(args.run, "scores_seed*_iter*.jsonl")))
    if not paths:
        raise ConfigError(
            f"{args.run} holds no score dumps; re-run with dump_scores = true")
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for path in paths:
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    out.write(line)
    finally:
        if args.out:
            out.close()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="alsim",
                                     description="pool-based active-learning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one strategy over the configured seeds")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--strategy", help="override the configured strategy")
    p.add_argument("--seed", type=int, help="run a single seed instead of the list")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dump-scores", action="store_true",
                   help="dump per-candidate scores each iteration")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="aggregate several runs")
    p.add_argument("--runs", required=True, help="glob of run directories")
    p.add_argument("--out", help="directory for aggregate CSVs")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("gen-synth", help="generate a synthetic blob dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", dest="per_class", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--separation", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_gen_synth)

    p = sub.add_parser("analyze", help="recompute diagnostics for a finished run")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("export-scores", help="collect per-candidate score dumps")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--out", help="output JSONL path (default: stdout)")
    p.set_defaults(func=_cmd_export_scores)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AlsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
