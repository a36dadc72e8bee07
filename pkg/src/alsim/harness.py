"""End-to-end active-learning simulation: the loop, synthetic data, reporting.

A run walks each seed through: stratified initial sample -> T iterations of
(train from scratch, evaluate, acquire, transfer) -> a final training pass on
the complete acquired set. Iteration counts come from the pool size and the
three protocol fractions: init_n = round(init * |pool0|), b_n = round(acq *
|pool0|), budget_n = round(budget * |pool0|), T = (budget_n - init_n) // b_n.

Record t (t = 0..T) holds the test accuracy of the model trained on
init_n + t * b_n labeled examples and, for t < T, the batch that model
acquired. Every random choice derives from the seed through named
substreams (see :mod:`alsim.seeding`), so identical configs reproduce
bit-identical results files; wall-clock timings are therefore kept out of
the results JSONL and written to a separate timing CSV.
"""

import csv
import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .acquisition import (
    AcquisitionConfig,
    acquire_badge,
    acquire_cal,
    acquire_entropy,
    acquire_kmeans_embedding,
    acquire_random,
)
from .classifier import (
    Classifier,
    ClassifierConfig,
    accuracy,
    encode,
    predict_proba,
    train,
)
from .dataset import (
    DatasetStore,
    Example,
    FeatureMatrix,
    _largest_remainder,
    load_feature_matrix,
    load_jsonl,
    build_tfidf,
    round_half_up,
    stratified_initial_sample,
    transfer_to_labeled,
)
from .errors import AlsimError, ConfigError, ValidationError
from .seeding import derive_rng, derive_seed


@dataclass
class LoopConfig:
    """Everything one simulation run needs.

    ``classifier.seed`` and ``acquisition.seed`` are ignored by the loop:
    per-iteration seeds are derived from the run seed instead.
    """

    budget_fraction: float = 0.15
    init_fraction: float = 0.01
    acquisition_fraction: float = 0.02
    seeds: tuple = (1, 2, 3, 4, 5)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    dataset_path: str | None = None
    n_classes: int | None = None  # None: infer from the dataset's labels
    feature_paths: dict = field(default_factory=dict)
    input_space: str = "features"
    tfidf_min_df: int | None = None
    representativeness_k: int = 10
    compute_diagnostics: bool = True
    dump_scores: bool = False

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if not (0 < self.init_fraction
                and self.init_fraction + self.acquisition_fraction <= self.budget_fraction <= 1):
            raise ConfigError(
                "need 0 < init and init + acquisition <= budget <= 1, got "
                f"init={self.init_fraction}, acquisition={self.acquisition_fraction}, "
                f"budget={self.budget_fraction}"
            )

    @property
    def strategy(self) -> str:
        return self.acquisition.strategy


@dataclass
class BudgetPlan:
    init_n: int
    b_n: int
    budget_n: int
    iterations: int


def budget_plan(pool_size: int, config: LoopConfig) -> BudgetPlan:
    """Turn the protocol fractions into counts; T < 1 is a config error."""
    init_n = round_half_up(config.init_fraction * pool_size)
    b_n = round_half_up(config.acquisition_fraction * pool_size)
    budget_n = round_half_up(config.budget_fraction * pool_size)
    if b_n < 1:
        raise ConfigError(f"acquisition size rounds to {b_n} for pool of {pool_size}")
    iterations = (budget_n - init_n) // b_n
    if iterations < 1:
        raise ConfigError(
            f"budget {budget_n} minus init {init_n} leaves no room for batches of {b_n}"
        )
    return BudgetPlan(init_n=init_n, b_n=b_n, budget_n=budget_n, iterations=iterations)


@dataclass
class IterationRecord:
    iteration: int
    labeled_size: int
    test_accuracy: float
    val_loss: float
    diagnostics: analysis.BatchDiagnostics | None
    inference_seconds: float
    selection_seconds: float
    acquired_ids: list[str]


@dataclass
class SeedResult:
    seed: int
    records: list[IterationRecord]
    final_labeled_ids: list[str]
    final_uncertainty: float | None = None
    candidate_scores: list[dict] = field(default_factory=list)
    error: str | None = None


@dataclass
class RunResult:
    config: dict
    strategy: str
    seed_results: list[SeedResult]


@dataclass
class FullModel:
    """The full-supervision reference: model plus cached train-universe probs."""

    model: Classifier
    ids: list[str]
    probs: np.ndarray


def load_store(config: LoopConfig) -> DatasetStore:
    """Load the dataset JSONL plus every configured FMAT feature space."""
    if config.dataset_path is None:
        raise ConfigError("no dataset_path configured")
    C = config.n_classes
    if C is None:
        # infer the class count from the dataset file contents
        with open(config.dataset_path, "r", encoding="utf-8") as fh:
            labels = [json.loads(line)["label"] for line in fh if line.strip()]
        if not labels:
            raise ValidationError(f"{config.dataset_path} holds no examples")
        C = int(max(labels)) + 1
    store = load_jsonl(config.dataset_path, C=C)
    for name, path in config.feature_paths.items():
        store.register_feature_space(name, load_feature_matrix(path))
    if config.tfidf_min_df is not None:
        build_tfidf(store, min_df=config.tfidf_min_df)
    if config.input_space not in store.feature_spaces:
        raise ConfigError(
            f"input space {config.input_space!r} not among "
            f"{sorted(store.feature_spaces)}"
        )
    return store


def train_full_model(config: LoopConfig, store: DatasetStore, seed: int) -> FullModel:
    """Train the reference model on the whole training universe (pool + labeled).

    Deterministic given (config, store, seed); the cached probability matrix
    covers every training-universe id, sorted ascending.
    """
    ids = sorted(store.ids_in_split("pool") + store.ids_in_split("labeled"))
    features = store.feature_spaces[config.input_space]
    val_ids = sorted(store.ids_in_split("validation"))
    cc = dataclasses.replace(config.classifier, seed=derive_seed(seed, "full"))
    model = train(
        features.subset(ids), store.labels_for(ids),
        features.subset(val_ids), store.labels_for(val_ids),
        cc, n_classes=store.C,
    )
    probs = predict_proba(model, features.subset(ids))
    return FullModel(model=model, ids=ids, probs=probs)


def _acquire(config: LoopConfig, store: DatasetStore, model: Classifier,
             plan: BudgetPlan, seed: int, iteration: int,
             need_encodings: bool = True):
    """Run one acquisition. Returns (selection, pool_ids, pool_encodings)."""
    features = store.feature_spaces[config.input_space]
    pool_ids = sorted(store.ids_in_split("pool"))
    labeled_ids = sorted(store.ids_in_split("labeled"))
    pool_feats = features.subset(pool_ids)
    acq = dataclasses.replace(
        config.acquisition, b=min(plan.b_n, len(pool_ids)),
        seed=derive_seed(seed, "acquire", iteration),
    )
    rng = derive_rng(seed, "acquire", iteration)
    strategy = acq.strategy

    t0 = time.perf_counter()
    pool_enc = None
    if strategy == "cal":
        pool_probs = predict_proba(model, pool_feats)
        labeled_feats = features.subset(labeled_ids)
        labeled_probs = predict_proba(model, labeled_feats)
        pool_enc = encode(model, pool_feats, acq.encoding, store.feature_spaces)
        labeled_enc = encode(model, labeled_feats, acq.encoding, store.feature_spaces)
    elif strategy == "entropy":
        pool_probs = predict_proba(model, pool_feats)
    elif strategy == "kmeans_embedding":
        pool_enc = encode(model, pool_feats, acq.encoding, store.feature_spaces)
    inference_seconds = time.perf_counter() - t0

    if strategy == "cal":
        selection = acquire_cal(
            pool_probs, pool_enc, labeled_probs, labeled_enc, acq,
            labeled_labels=store.labels_for(labeled_ids),
        )
    elif strategy == "entropy":
        selection = acquire_entropy(pool_probs, pool_ids, acq.b)
    elif strategy == "random":
        selection = acquire_random(pool_ids, acq.b, rng)
    elif strategy == "kmeans_embedding":
        selection = acquire_kmeans_embedding(pool_enc, acq.b, rng,
                                             normalize=acq.normalize_kmeans)
    elif strategy == "badge":
        selection = acquire_badge(model, pool_feats, acq.b, rng)
    else:
        raise ConfigError(f"unknown strategy {strategy!r}")
    selection.inference_seconds = inference_seconds

    if pool_enc is None and need_encodings:
        pool_enc = encode(model, pool_feats, acq.encoding, store.feature_spaces)
    return selection, pool_ids, pool_enc


def _diagnose(config: LoopConfig, store: DatasetStore, batch_ids, pool_ids,
              pool_enc: FeatureMatrix, full: FullModel) -> analysis.BatchDiagnostics:
    """Batch diagnostics; metrics that are undefined for this data become None."""
    batch = set(batch_ids)
    rest = [i for i in pool_ids if i not in batch]
    di = None
    token_lists = store.tokens_for(batch_ids) + store.tokens_for(rest)
    if all(t is not None for t in token_lists):
        q_tokens = set().union(*store.tokens_for(batch_ids)) if batch_ids else set()
        r_tokens = set().union(*store.tokens_for(rest)) if rest else set()
        try:
            di = analysis.div_input(q_tokens, r_tokens)
        except AlsimError:
            di = None
    try:
        df = analysis.div_feature(batch_ids, pool_ids, pool_enc)
    except AlsimError:
        df = None
    unc = analysis.uncertainty_of_batch(batch_ids, full.probs, full.ids)
    try:
        rep = analysis.representativeness(batch_ids, pool_ids, pool_enc,
                                          K=config.representativeness_k)
    except AlsimError:
        rep = None
    return analysis.BatchDiagnostics(div_input=di, div_feature=df,
                                     uncertainty=unc, representativeness=rep)


def _run_seed(config: LoopConfig, store: DatasetStore, plan: BudgetPlan,
              seed: int, full: FullModel | None) -> SeedResult:
    features = store.feature_spaces[config.input_space]
    val_ids = sorted(store.ids_in_split("validation"))
    test_ids = sorted(store.ids_in_split("test"))
    val_X, val_y = features.subset(val_ids), store.labels_for(val_ids)
    test_X, test_y = features.subset(test_ids), store.labels_for(test_ids)

    init_ids = stratified_initial_sample(store, config.init_fraction,
                                         derive_rng(seed, "init"))
    if len(init_ids) != plan.init_n:
        raise ConfigError(
            f"initial sample drew {len(init_ids)} ids, plan says {plan.init_n}"
        )

    records: list[IterationRecord] = []
    score_dumps: list[dict] = []
    for t in range(plan.iterations + 1):
        labeled_ids = sorted(store.ids_in_split("labeled"))
        cc = dataclasses.replace(config.classifier, seed=derive_seed(seed, "train", t))
        model = train(features.subset(labeled_ids), store.labels_for(labeled_ids),
                      val_X, val_y, cc, n_classes=store.C)
        acc = accuracy(model, test_X, test_y)

        if t < plan.iterations:
            selection, pool_ids, pool_enc = _acquire(
                config, store, model, plan, seed, t,
                need_encodings=config.compute_diagnostics and full is not None)
            diag = None
            if config.compute_diagnostics and full is not None:
                diag = _diagnose(config, store, selection.ids, pool_ids, pool_enc, full)
            if config.dump_scores and selection.candidate_scores is not None:
                score_dumps.append({
                    "iteration": t,
                    "scores": selection.candidate_scores,
                })
            transfer_to_labeled(store, selection.ids)
            records.append(IterationRecord(
                iteration=t, labeled_size=len(labeled_ids), test_accuracy=acc,
                val_loss=model.val_loss, diagnostics=diag,
                inference_seconds=selection.inference_seconds,
                selection_seconds=selection.selection_seconds,
                acquired_ids=list(selection.ids),
            ))
        else:
            records.append(IterationRecord(
                iteration=t, labeled_size=len(labeled_ids), test_accuracy=acc,
                val_loss=model.val_loss, diagnostics=None,
                inference_seconds=0.0, selection_seconds=0.0, acquired_ids=[],
            ))

    final_labeled = sorted(store.ids_in_split("labeled"))
    final_unc = None
    if config.compute_diagnostics and full is not None:
        final_unc = analysis.uncertainty_of_batch(final_labeled, full.probs, full.ids)
    return SeedResult(seed=seed, records=records, final_labeled_ids=final_labeled,
                      final_uncertainty=final_unc, candidate_scores=score_dumps)


def run_simulation(config: LoopConfig, store: DatasetStore | None = None) -> RunResult:
    """Run the full multi-seed loop and return every record.

    The store's split assignment is restored between seeds (and afterwards),
    so each seed starts from the same pristine pool. A module error inside
    one seed aborts that seed with a partial-result marker instead of
    killing the run.
    """
    if store is None:
        store = load_store(config)
    snapshot = store.snapshot_splits()
    plan = budget_plan(len(store.ids_in_split("pool")), config)

    seed_results = []
    full_cache: dict[int, FullModel] = {}
    try:
        for seed in config.seeds:
            store.restore_splits(snapshot)
            full = None
            if config.compute_diagnostics:
                if seed not in full_cache:
                    full_cache[seed] = train_full_model(config, store, seed)
                full = full_cache[seed]
            try:
                seed_results.append(_run_seed(config, store, plan, seed, full))
            except AlsimError as exc:
                seed_results.append(SeedResult(
                    seed=seed, records=[], final_labeled_ids=[],
                    error=f"{type(exc).__name__}: {exc}",
                ))
    finally:
        store.restore_splits(snapshot)

    sizes = {len(r.final_labeled_ids) for r in seed_results if r.error is None}
    if len(sizes) > 1:
        raise AlsimError(f"seeds disagree on final labeled size: {sorted(sizes)}")
    return RunResult(config=config_echo(config), strategy=config.strategy,
                     seed_results=seed_results)


def config_echo(config: LoopConfig) -> dict:
    echo = dataclasses.asdict(config)
    echo["seeds"] = list(config.seeds)
    return echo


def recompute_diagnostics(config: LoopConfig, run: RunResult,
                          store: DatasetStore | None = None) -> list[tuple]:
    """Replay a finished run's acquisitions and recompute batch diagnostics.

    Models are retrained deterministically from the recorded seeds, so the
    returned rows match what the original run reported. Rows are
    (strategy, seed, iteration, div_input, div_feature, uncertainty,
    representativeness).
    """
    if store is None:
        store = load_store(config)
    snapshot = store.snapshot_splits()
    features = store.feature_spaces[config.input_space]
    rows = []
    try:
        for sr in run.seed_results:
            if sr.error is not None:
                continue
            store.restore_splits(snapshot)
            full = train_full_model(config, store, sr.seed)
            stratified_initial_sample(store, config.init_fraction,
                                      derive_rng(sr.seed, "init"))
            val_ids = sorted(store.ids_in_split("validation"))
            val_X, val_y = features.subset(val_ids), store.labels_for(val_ids)
            for rec in sr.records:
                if not rec.acquired_ids:
                    continue
                labeled_ids = sorted(store.ids_in_split("labeled"))
                cc = dataclasses.replace(config.classifier,
                                         seed=derive_seed(sr.seed, "train", rec.iteration))
                model = train(features.subset(labeled_ids), store.labels_for(labeled_ids),
                              val_X, val_y, cc, n_classes=store.C)
                pool_ids = sorted(store.ids_in_split("pool"))
                pool_enc = encode(model, features.subset(pool_ids),
                                  config.acquisition.encoding, store.feature_spaces)
                diag = _diagnose(config, store, rec.acquired_ids, pool_ids,
                                 pool_enc, full)
                rows.append((run.strategy, sr.seed, rec.iteration, diag.div_input,
                             diag.div_feature, diag.uncertainty,
                             diag.representativeness))
                transfer_to_labeled(store, rec.acquired_ids)
    finally:
        store.restore_splits(snapshot)
    return rows


# ---------------------------------------------------------------------------
# synthetic data


def generate_synthetic(classes: int, per_class: int, dim: int, separation: float,
                       rng, n_landmarks: int = 64, tokens_per_point: int = 4):
    """Isotropic unit-variance Gaussian blobs with equidistant class means.

    Means sit at (separation / sqrt(2)) * e_c, so every pair of classes is
    exactly ``separation`` apart (requires dim >= classes). Splits are
    stratified 80/10/10 per class by largest remainder (pool, validation,
    test order). Each point also gets a token view: the codes of its
    ``tokens_per_point`` nearest landmarks, the landmarks being
    ``n_landmarks`` extra draws from the same mixture. Returns
    (store, feature_matrix); the matrix is registered as space "features".
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    if classes < 2:
        raise ValidationError(f"need >= 2 classes, got {classes}")
    if dim < classes:
        raise ValidationError(f"need dim >= classes to place equidistant means "
                              f"({dim} < {classes})")
    if per_class < 3:
        raise ValidationError("need >= 3 points per class for an 80/10/10 split")

    means = np.zeros((classes, dim))
    for c in range(classes):
        means[c, c] = separation / math.sqrt(2.0)

    blocks = [means[c] + rng.standard_normal((per_class, dim)) for c in range(classes)]
    X = np.concatenate(blocks, axis=0)
    labels = np.repeat(np.arange(classes), per_class)

    lm_class = rng.integers(classes, size=n_landmarks)
    landmarks = means[lm_class] + rng.standard_normal((n_landmarks, dim))
    d2 = analysis._sq_dists(X, landmarks)
    token_idx = np.argsort(d2, axis=1, kind="stable")[:, :tokens_per_point]

    split_counts = _largest_remainder(per_class, np.array([0.8, 0.1, 0.1]))
    splits_per_class = (["pool"] * int(split_counts[0])
                        + ["validation"] * int(split_counts[1])
                        + ["test"] * int(split_counts[2]))

    store = DatasetStore(classes)
    ids = [f"ex{i:05d}" for i in range(classes * per_class)]
    for c in range(classes):
        perm = rng.permutation(per_class)
        split_of_member = [None] * per_class
        for rank, member in enumerate(perm):
            split_of_member[int(member)] = splits_per_class[rank]
        for m in range(per_class):
            i = c * per_class + m
            store.add_example(Example(
                id=ids[i], label=int(labels[i]), split=split_of_member[m],
                tokens=tuple(f"lm{j:03d}" for j in token_idx[i]),
            ))
    matrix = FeatureMatrix(X, ids)
    store.register_feature_space("features", matrix)
    return store, matrix


# ---------------------------------------------------------------------------
# result emission


def _diag_json(diag: analysis.BatchDiagnostics | None):
    if diag is None:
        return None
    out = {}
    for name, value in (("div_input", diag.div_input),
                        ("div_feature", diag.div_feature),
                        ("uncertainty", diag.uncertainty),
                        ("representativeness", diag.representativeness)):
        if value is not None and math.isinf(value):
            out[name] = None
            out[name + "_infinite"] = True
        else:
            out[name] = value
    return out


def results_jsonl(result: RunResult) -> str:
    """The deterministic results stream: one record per line, no wall-clock."""
    lines = []
    for sr in result.seed_results:
        for rec in sr.records:
            lines.append(json.dumps({
                "strategy": result.strategy,
                "seed": sr.seed,
                "iteration": rec.iteration,
                "labeled_size": rec.labeled_size,
                "test_accuracy": rec.test_accuracy,
                "val_loss": rec.val_loss,
                "diagnostics": _diag_json(rec.diagnostics),
                "acquired_ids": rec.acquired_ids,
            }, sort_keys=True))
        tail = {"strategy": result.strategy, "seed": sr.seed,
                "final_labeled_size": len(sr.final_labeled_ids),
                "final_uncertainty": sr.final_uncertainty}
        if sr.error is not None:
            tail = {"strategy": result.strategy, "seed": sr.seed,
                    "partial": True, "error": sr.error}
        lines.append(json.dumps(tail, sort_keys=True))
    return "\n".join(lines) + "\n"


def curve_csv(result: RunResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["strategy", "seed", "labeled_size", "accuracy"])
    for sr in result.seed_results:
        for rec in sr.records:
            writer.writerow([result.strategy, sr.seed, rec.labeled_size,
                             repr(rec.test_accuracy)])
    return buf.getvalue()


def timing_csv(result: RunResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["strategy", "seed", "iteration",
                     "inference_seconds", "selection_seconds"])
    for sr in result.seed_results:
        for rec in sr.records[:-1]:
            writer.writerow([result.strategy, sr.seed, rec.iteration,
                             f"{rec.inference_seconds:.6f}",
                             f"{rec.selection_seconds:.6f}"])
    return buf.getvalue()


def write_run(result: RunResult, out_dir) -> None:
    """Write config echo, results JSONL, curve CSV, timing CSV, score dumps."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(result.config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "results.jsonl"), "w", encoding="utf-8") as fh:
        fh.write(results_jsonl(result))
    with open(os.path.join(out_dir, "curve.csv"), "w", encoding="utf-8") as fh:
        fh.write(curve_csv(result))
    with open(os.path.join(out_dir, "timing.csv"), "w", encoding="utf-8") as fh:
        fh.write(timing_csv(result))
    for sr in result.seed_results:
        for dump in sr.candidate_scores:
            name = f"scores_seed{sr.seed}_iter{dump['iteration']}.jsonl"
            with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
                for ex_id in sorted(dump["scores"]):
                    fh.write(json.dumps({"id": ex_id, "score": dump["scores"][ex_id],
                                         "strategy": result.strategy}) + "\n")


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class ComparisonReport:
    """Seed-aggregated accuracy curves and batch-metric grid."""

    curve_rows: list    # (strategy, labeled_size, mean, std, n)
    metric_rows: list   # (strategy, div_input, div_feature, uncertainty, repr)
    timing_rows: list   # (strategy, median_inference_seconds, median_selection_seconds)

    def summary(self) -> str:
        out = ["accuracy by labeled-set size (mean +- std over seeds)"]
        for strategy, size, mean, std, n in self.curve_rows:
            out.append(f"  {strategy:>18} @ {size:>6}: {mean:.4f} +- {std:.4f} ({n} seeds)")
        out.append("batch metrics (first-iteration batch; uncertainty over the final set)")
        out.append(f"  {'strategy':>18} {'div_input':>10} {'div_feature':>12} "
                   f"{'uncertainty':>12} {'repr':>10}")
        for strategy, di, df, unc, rep in self.metric_rows:
            cells = [f"{v:.4f}" if v is not None and not math.isinf(v)
                     else ("inf" if v is not None else "-") for v in (di, df, unc, rep)]
            out.append(f"  {strategy:>18} {cells[0]:>10} {cells[1]:>12} "
                       f"{cells[2]:>12} {cells[3]:>10}")
        out.append("median acquisition seconds (inference, selection)")
        for strategy, inf_s, sel_s in self.timing_rows:
            out.append(f"  {strategy:>18}: ({inf_s:.3f}, {sel_s:.3f})")
        return "\n".join(out)


def _mean_or_none(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def compare(results: list[RunResult]) -> ComparisonReport:
    """Aggregate runs: per-strategy learning curves and Table-style metrics."""
    curves: dict = {}
    metrics: dict = {}
    timings: dict = {}
    for result in results:
        for sr in result.seed_results:
            if sr.error is not None:
                continue
            for rec in sr.records:
                curves.setdefault((result.strategy, rec.labeled_size), []).append(
                    rec.test_accuracy)
            m = metrics.setdefault(result.strategy,
                                   {"div_input": [], "div_feature": [],
                                    "uncertainty": [], "representativeness": []})
            first = sr.records[0].diagnostics if sr.records else None
            if first is not None:
                m["div_input"].append(first.div_input)
                m["div_feature"].append(first.div_feature)
                m["representativeness"].append(first.representativeness)
            m["uncertainty"].append(sr.final_uncertainty)
            t = timings.setdefault(result.strategy, {"inference": [], "selection": []})
            for rec in sr.records[:-1]:
                t["inference"].append(rec.inference_seconds)
                t["selection"].append(rec.selection_seconds)

    curve_rows = [
        (strategy, size, float(np.mean(vals)), float(np.std(vals)), len(vals))
        for (strategy, size), vals in sorted(curves.items())
    ]
    metric_rows = [
        (strategy,
         _mean_or_none(m["div_input"]), _mean_or_none(m["div_feature"]),
         _mean_or_none(m["uncertainty"]), _mean_or_none(m["representativeness"]))
        for strategy, m in sorted(metrics.items())
    ]
    timing_rows = [
        (strategy,
         float(np.median(t["inference"])) if t["inference"] else 0.0,
         float(np.median(t["selection"])) if t["selection"] else 0.0)
        for strategy, t in sorted(timings.items())
    ]
    return ComparisonReport(curve_rows=curve_rows, metric_rows=metric_rows,
                            timing_rows=timing_rows)


def write_comparison(report: ComparisonReport, out_dir) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "aggregate.csv"), "w", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "labeled_size", "mean_accuracy",
                         "std_accuracy", "n_seeds"])
        for strategy, size, mean, std, n in report.curve_rows:
            writer.writerow([strategy, size, repr(mean), repr(std), n])
    with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "div_input", "div_feature",
                         "uncertainty", "representativeness"])
        for strategy, di, df, unc, rep in report.metric_rows:
            writer.writerow([strategy] + ["" if v is None else repr(v)
                                          for v in (di, df, unc, rep)])
    with open(os.path.join(out_dir, "timing_summary.csv"), "w", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "median_inference_seconds",
                         "median_selection_seconds"])
        for strategy, inf_s, sel_s in report.timing_rows:
            writer.writerow([strategy, f"{inf_s:.6f}", f"{sel_s:.6f}"])
