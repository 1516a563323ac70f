"""Experiment orchestration: config loading, method runners and report files.

Every report carries ``schema_version``, the hash of the resolved config,
the hash of the preprocessed cohort and the master seed. Wall-clock times go
only to ``run_log.json`` so that reports are byte-stable across reruns.
"""

import errno
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, fields
from functools import cached_property
from pathlib import Path

import numpy as np

from .clustering import (agglomerative, cluster_eval, cut_dendrogram, kmeans, truncate_dendrogram)
from .cohort import (PreprocessConfig, cohort_from_csv, cohort_to_csv, load_column_specs, normalize,
                     parse_table, preprocess)
from .errors import ConfigError, ConsistencyError
from .metrics import EvalResult
from .nn import MlpArchitecture, TrainConfig, init_mlp, train
from .protocol import Protocol, derive_seed
from .search import architecture_search, repeated_eval
from .svg import BarChart, DendrogramPlot, LineChart, Series, emit_svg
from .synth import GeneratorConfig, generate
from .tree import (DEFAULT_LEAF_SIZES, TreeConfig, evaluate_tree, extract_rules, fit_tree, pruning_sweep,
                   rules_to_text)

SCHEMA_VERSION = 1
METHODS = ("cluster", "tree", "nn", "sweep")

_SECTION_DEFAULTS = {
    "cluster": {"k": 2, "metrics": ["euclidean", "manhattan", "cosine"], "linkage": "average",
                "max_leaves": 30, "n_restarts": 10},
    "tree": {"min_samples_leaf": 20, "split_fraction": 0.80, "max_depth": None},
    "sweep": {"leaf_sizes": list(DEFAULT_LEAF_SIZES), "floor": 0.85, "split_fraction": 0.80},
    "nn": {"arch": [20, 14], "hidden_activation": "linear", "learning_rate": 0.01, "epochs": 200,
           "batch_size": 32, "init_scale": 0.1, "search": False,
           "search_options": {"start": 5, "step": 5, "first_sizes": [10, 20, 30, 40], "second_start": 2,
                              "second_step": 2, "patience": 2}},
}


@dataclass
class ExperimentConfig:
    """Resolved experiment settings.

    ``cohort`` holds either ``csv`` + ``columns`` (raw table and role sidecar),
    ``preprocessed`` (a cohort CSV written by ``preprocess``), or nothing, in
    which case a synthetic cohort is generated from the ``synth`` section.
    """

    cohort: dict = field(default_factory=dict)
    preprocess: dict = field(default_factory=dict)
    protocol: dict = field(default_factory=dict)
    cluster: dict = field(default_factory=dict)
    tree: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    nn: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)
    base_dir: str = "."

    def __post_init__(self):
        for name, defaults in _SECTION_DEFAULTS.items():
            merged = dict(defaults)
            merged.update(getattr(self, name) or {})
            setattr(self, name, merged)
        proto = {"repeats": 5, "split_fraction": 0.70, "seed": 0}
        proto.update(self.protocol or {})
        self.protocol = proto
        self.validate()

    def validate(self):
        p = self.protocol
        if not isinstance(p["repeats"], int) or p["repeats"] < 1:
            raise ConfigError("protocol.repeats must be an integer >= 1")
        for where, frac in (("protocol", p["split_fraction"]), ("tree", self.tree["split_fraction"]),
                            ("sweep", self.sweep["split_fraction"])):
            if not 0.0 < float(frac) < 1.0:
                raise ConfigError(f"{where}.split_fraction must lie in (0, 1)")
        if not isinstance(p["seed"], int) or p["seed"] < 0:
            raise ConfigError("protocol.seed must be a non-negative integer")
        for key in ("csv", "columns", "preprocessed"):
            if key in self.cohort and not self.path(key).is_file():
                raise FileNotFoundError(errno.ENOENT, "file not found", str(self.path(key)))
        if "csv" in self.cohort and "columns" not in self.cohort:
            raise ConfigError("cohort.csv needs a cohort.columns role file")
        try:
            PreprocessConfig(**self.preprocess)
            GeneratorConfig(**self.synth)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def seed(self):
        return self.protocol["seed"]

    def with_seed(self, seed):
        data = self.to_dict()
        data["protocol"]["seed"] = int(seed)
        return ExperimentConfig(**data, base_dir=self.base_dir)

    def path(self, key):
        p = Path(self.cohort[key])
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self):
        return {f.name: json.loads(json.dumps(getattr(self, f.name)))
                for f in fields(self) if f.name != "base_dir"}

    def config_hash(self):
        return _sha256(canonical_json(self.to_dict()))

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(errno.ENOENT, "file not found", str(path))
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data, base_dir=str(path.parent))

    @classmethod
    def from_dict(cls, data, base_dir="."):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        return cls(**data, base_dir=base_dir)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _sha256(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cohort_hash(cohort):
    return _sha256(cohort_to_csv(cohort))


@dataclass
class Context:
    """Resolved config plus the one preprocessed cohort every method sees."""

    config: ExperimentConfig
    cohort: object
    report: object = None  # PreprocessReport when built from a raw table
    source: str = ""

    @cached_property
    def meta(self):
        return {"schema_version": SCHEMA_VERSION, "config_hash": self.config.config_hash(),
                "cohort_hash": cohort_hash(self.cohort), "seed": self.config.seed}


def load_cohort(config):
    """Build the preprocessed cohort named by the config."""
    c = config.cohort
    if "preprocessed" in c:
        cohort = cohort_from_csv(config.path("preprocessed").read_text(encoding="utf-8"))
        return Context(config, cohort, None, "preprocessed")
    if "csv" in c:
        table = parse_table(config.path("csv").read_text(encoding="utf-8"))
        specs = load_column_specs(config.path("columns").read_text(encoding="utf-8"))
        source = "csv"
    else:
        gen = generate(synth_config(config))
        table, specs = parse_table(gen.csv_text), load_column_specs(gen.specs_json)
        source = "synthetic"
    cohort, report = preprocess(table, specs, PreprocessConfig(**config.preprocess))
    return Context(config, cohort, report, source)


def synth_config(config):
    """Generator settings; the seed follows the master seed unless set explicitly."""
    return GeneratorConfig(**{"seed": config.seed, **config.synth})


def _protocol(config, split_fraction=None):
    p = config.protocol
    norm = config.preprocess.get("normalization", "min_max")
    return Protocol(p["repeats"], float(split_fraction or p["split_fraction"]), p["seed"], norm)


def _train_config(nn_section):
    return TrainConfig(learning_rate=float(nn_section["learning_rate"]), epochs=int(nn_section["epochs"]),
                       batch_size=int(nn_section["batch_size"]), init_scale=float(nn_section["init_scale"]))


# -- writers -----------------------------------------------------------------

class Writer:
    """Collects artifacts in memory and writes each path once, sorted."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.files = {}

    def json(self, name, obj):
        self.files[name] = (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")

    def text(self, name, text):
        self.files[name] = text.encode("utf-8")

    def csv(self, name, header, rows):
        lines = [",".join(header)] + [",".join(_cell(v) for v in row) for row in rows]
        self.text(name, "\n".join(lines) + "\n")

    def svg(self, name, chart):
        self.files[name] = emit_svg(chart)

    def flush(self):
        if self.out_dir is None:
            return []
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for name in sorted(self.files):
            (self.out_dir / name).write_bytes(self.files[name])
        return sorted(self.files)


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _eval_dict(r):
    return r.to_dict() if isinstance(r, EvalResult) else r


# -- runners -----------------------------------------------------------------

def run_preprocess(ctx, writer):
    writer.text("cohort.csv", cohort_to_csv(ctx.cohort))
    body = {"source": ctx.source, "class_counts": list(map(int, ctx.cohort.class_counts()))}
    if ctx.report is not None:
        body["report"] = ctx.report.to_dict()
    report = {**ctx.meta, "kind": "preprocess", **body}
    writer.json("preprocess_report.json", report)
    return report


def _cluster_data(ctx):
    mode = ctx.config.preprocess.get("normalization", "min_max")
    return normalize(ctx.cohort, mode)[0].features


def run_cluster(ctx, writer):
    """k-means plus one hierarchical run per metric, each cut at ``k`` groups."""
    sec = ctx.config.cluster
    X, y = _cluster_data(ctx), ctx.cohort.labels
    k = int(sec["k"])
    entries = []
    km = kmeans(X, k, derive_seed(ctx.config.seed, "kmeans", 0), n_restarts=int(sec["n_restarts"]))
    ev = cluster_eval(km.assignment, y)
    entries.append({"method": "kmeans", "k": k, "inertia": km.inertia, "iterations": km.iterations,
                    "mapping": {str(a): b for a, b in ev.mapping.items()}, **ev.eval.to_dict()})
    dendrograms = {}
    for metric in sec["metrics"]:
        d = agglomerative(X, metric, sec["linkage"])
        dendrograms[metric] = d
        ev = cluster_eval(cut_dendrogram(d, k), y)
        entries.append({"method": "hierarchical", "metric": metric, "linkage": sec["linkage"], "k": k,
                        "mapping": {str(a): b for a, b in ev.mapping.items()}, **ev.eval.to_dict()})
    best = max(entries, key=lambda e: e["accuracy"])  # first wins ties
    report = {**ctx.meta, "kind": "cluster", "entries": entries, "best": best}
    writer.json("cluster_report.json", report)
    first = sec["metrics"][0] if sec["metrics"] else None
    if first is not None:
        d = dendrograms[first]
        writer.json("dendrogram.json", {**ctx.meta, **d.to_dict()})
        t = truncate_dendrogram(d, int(sec["max_leaves"]))
        writer.svg("dendrogram.svg", DendrogramPlot(t, y, title=f"{first} distance, {sec['linkage']} linkage"))
    return report


def run_tree(ctx, writer, sweep=False):
    sec = ctx.config.tree
    cfg = TreeConfig(min_samples_leaf=int(sec["min_samples_leaf"]), max_depth=sec["max_depth"])
    runs, avg = evaluate_tree(ctx.cohort, cfg, _protocol(ctx.config, sec["split_fraction"]))
    # rules come from a tree on every row, in original units so thresholds read naturally
    full = fit_tree(ctx.cohort, cfg)
    writer.text("rules.txt", rules_to_text(extract_rules(full), ctx.cohort.feature_names))
    writer.json("tree.json", {**ctx.meta, "feature_names": list(ctx.cohort.feature_names), "tree": full.to_dict()})
    report = {**ctx.meta, "kind": "tree", "min_samples_leaf": cfg.min_samples_leaf,
              "split_fraction": float(sec["split_fraction"]), "runs": [r.to_dict() for r in runs],
              "average": avg.to_dict(), "n_leaves": len(full.leaves()), "depth": full.depth()}
    if sweep:
        report["sweep"] = run_sweep(ctx, writer)["points"]
    writer.json("tree_report.json", report)
    return report


def run_sweep(ctx, writer):
    sec = ctx.config.sweep
    p = ctx.config.protocol
    curve = pruning_sweep(ctx.cohort, sec["leaf_sizes"], p["repeats"], float(sec["split_fraction"]), p["seed"],
                          float(sec["floor"]), ctx.config.preprocess.get("normalization", "min_max"))
    rows = curve.to_rows()
    writer.csv("sweep.csv", ["min_samples_leaf", "accuracy", "sensitivity", "specificity", "selected"],
               [[r[k] for k in ("min_samples_leaf", "accuracy", "sensitivity", "specificity", "selected")]
                for r in rows])
    xs = [m for m, _ in curve.points]
    writer.svg("sweep.svg", LineChart([
        Series("accuracy", xs, [r.accuracy for _, r in curve.points]),
        Series("sensitivity", xs, [r.sensitivity for _, r in curve.points]),
        Series("specificity", xs, [r.specificity for _, r in curve.points]),
    ], "Pruning sweep", "minimum samples per leaf", "averaged test rate"))
    report = {**ctx.meta, "kind": "sweep", "floor": curve.floor, "selected": curve.selected, "points": rows}
    writer.json("sweep_report.json", report)
    return report


def _search_artifacts(ctx, writer, report):
    writer.json("search_report.json", {**ctx.meta, **report.to_dict()})
    writer.csv("phase1.csv", ["hidden", "accuracy", "sensitivity", "specificity"],
               [[h, r.accuracy, r.sensitivity, r.specificity] for h, r in report.phase1])
    writer.svg("phase1.svg", LineChart([Series("accuracy", [h for h, _ in report.phase1],
                                               [r.accuracy for _, r in report.phase1])],
                                       "One hidden layer", "hidden neurons", "averaged test accuracy"))
    writer.csv("phase2.csv", ["first", "second", "accuracy", "sensitivity", "specificity"],
               [[f, s, r.accuracy, r.sensitivity, r.specificity]
                for f, pts in report.phase2.items() for s, r in pts])
    writer.svg("phase2.svg", LineChart([Series(f"first={f}", [s for s, _ in pts], [r.accuracy for _, r in pts])
                                        for f, pts in report.phase2.items()],
                                       "Two hidden layers", "second-layer neurons", "averaged test accuracy"))


def run_nn(ctx, writer, arch=None):
    """Evaluate one architecture; optionally search for it first."""
    sec = ctx.config.nn
    protocol = _protocol(ctx.config)
    tcfg = _train_config(sec)
    width = ctx.cohort.n_features
    search = None
    if arch is None and sec["search"]:
        search = architecture_search(ctx.cohort, protocol, tcfg, sec["hidden_activation"], **sec["search_options"])
        _search_artifacts(ctx, writer, search)
        architecture = search.selected
    else:
        hidden = tuple(int(h) for h in (arch if arch is not None else sec["arch"]))
        architecture = MlpArchitecture((width, *hidden, 1), sec["hidden_activation"])
    runs, avg = repeated_eval(ctx.cohort, architecture, protocol, tcfg)

    # a final model on one train split for model.json and the loss curve
    norm_cohort = normalize(ctx.cohort, protocol.normalization)[0]
    model = train(init_mlp(architecture, derive_seed(protocol.seed, "nn-init", 0), tcfg.init_scale), norm_cohort,
                  TrainConfig(**{**asdict(tcfg), "seed": derive_seed(protocol.seed, "nn-shuffle", 0)}))
    writer.json("model.json", {**ctx.meta, **model.to_dict()})
    writer.csv("loss_curve.csv", ["epoch", "loss"], [[i + 1, v] for i, v in enumerate(model.training_loss_curve)])
    report = {**ctx.meta, "kind": "nn", "architecture": architecture.to_dict(), "protocol": protocol.to_dict(),
              "train_config": asdict(tcfg), "runs": [r.to_dict() for r in runs], "average": avg.to_dict(),
              "searched": search is not None}
    writer.json("nn_report.json", report)
    return report


def run_compare(ctx, writer):
    """All three families on one cohort; clustering is represented by its best configuration."""
    sink = Writer(None)  # per-method artifacts stay out of the comparison output
    cluster = run_cluster(ctx, sink)
    tree = run_tree(ctx, sink)
    nn = run_nn(ctx, sink)
    parts = {"clustering": cluster, "tree": tree, "network": nn}
    hashes = {name: (r["config_hash"], r["cohort_hash"]) for name, r in parts.items()}
    if len(set(hashes.values())) != 1:
        raise ConsistencyError(f"method runs disagree on config/cohort hash: {hashes}")
    best = cluster["best"]
    entries = [
        {"method": "clustering", "detail": {k: v for k, v in best.items() if k not in EvalResult.__dataclass_fields__},
         **_pick_rates(best)},
        {"method": "tree", "detail": {"min_samples_leaf": tree["min_samples_leaf"],
                                      "split_fraction": tree["split_fraction"]}, **tree["average"]},
        {"method": "network", "detail": {"layer_sizes": nn["architecture"]["layer_sizes"],
                                         "hidden_activation": nn["architecture"]["hidden_activation"]},
         **nn["average"]},
    ]
    report = {**ctx.meta, "kind": "compare", "entries": entries,
              "reference_ordering": "clustering < tree < network"}
    writer.json("comparison.json", report)
    names = [e["method"] for e in entries]
    writer.svg("comparison.svg", BarChart(names, {
        "accuracy": [e["accuracy"] for e in entries],
        "sensitivity": [e["sensitivity"] for e in entries],
        "specificity": [e["specificity"] for e in entries],
    }, "Classification performance by approach", "rate"))
    return report


def _pick_rates(d):
    return {k: d[k] for k in ("sensitivity", "specificity", "accuracy", "counts")}


RUNNERS = {"preprocess": run_preprocess, "cluster": run_cluster, "tree": run_tree, "nn": run_nn,
           "sweep": run_sweep, "compare": run_compare}


def run(command, config, out_dir, **options):
    """Load the cohort, run ``command`` and write artifacts plus ``run_log.json``."""
    started = time.time()
    ctx = load_cohort(config)
    writer = Writer(out_dir)
    report = RUNNERS[command](ctx, writer, **options)
    written = writer.flush()
    if out_dir is not None:
        log = {**ctx.meta, "command": command, "started_unix": started, "elapsed_s": time.time() - started,
               "artifacts": written}
        (Path(out_dir) / "run_log.json").write_text(json.dumps(log, sort_keys=True, indent=2) + "\n",
                                                    encoding="utf-8")
    return report


def write_synth(config, out_dir):
    gen = generate(synth_config(config))
    writer = Writer(out_dir)
    writer.text("synth_cohort.csv", gen.csv_text)
    writer.text("synth_columns.json", gen.specs_json)
    writer.text("synth_truth.csv", gen.truth_csv())
    writer.json("synth_report.json", {"schema_version": SCHEMA_VERSION, "config_hash": config.config_hash(),
                                      "seed": config.seed, "generator": gen.config.to_dict(),
                                      "informative": gen.informative,
                                      "class_counts": np.bincount(gen.truth, minlength=2).tolist()})
    return writer.flush()
