"""Synthetic patient cohorts with known labels and planted preprocessing defects.

A default cohort has the shape of the clinical table it stands in for: 1045
rows x 80 columns, of which 215 rows carry too many missing values, 18 columns
are free text, 3 are constant and 3 are affine copies of other inputs. After
preprocessing it leaves 830 rows (418 responders, 412 non-responders) and 55
input features.
"""

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .cohort import ColumnSpec, dump_column_specs
from .errors import ConfigError, ContractError
from .metrics import evaluate

_MISSING_TOKENS = ("", "NA", "NaN")
_STATUS = ("Active", "Complete", "Withdrawn", "Deceased")


@dataclass(frozen=True)
class GeneratorConfig:
    n_rows: int = 1045
    n_input_cols: int = 55
    n_responders: int = 418
    n_nonresponders: int = 412
    separability: float = 1.5
    n_informative: int = 10
    categorical_fraction: float = 0.2
    missing_cell_rate: float = 0.02
    n_rows_over_threshold: int = 215
    threshold: int = 10
    n_commentary: int = 18
    n_constant: int = 3
    n_duplicate: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.n_responders + self.n_nonresponders != self.n_rows - self.n_rows_over_threshold:
            raise ConfigError("class counts must sum to n_rows - n_rows_over_threshold")
        if min(self.n_responders, self.n_nonresponders) < 0 or self.n_rows_over_threshold < 0:
            raise ConfigError("counts must be non-negative")
        if self.n_input_cols < 1 or not 0 <= self.n_informative <= self.n_input_cols:
            raise ConfigError("need 1 <= n_input_cols and 0 <= n_informative <= n_input_cols")
        if self.n_duplicate > self.n_input_cols:
            raise ConfigError("more planted duplicates than input columns to copy")
        if min(self.n_commentary, self.n_constant, self.n_duplicate) < 0:
            raise ConfigError("planted column counts must be non-negative")
        if self.n_rows_over_threshold and self.threshold + 1 > self.n_input_cols:
            raise ConfigError("too few input columns to push a row over the missing-value threshold")
        if self.separability < 0 or not 0 <= self.missing_cell_rate < 1 or not 0 <= self.categorical_fraction <= 1:
            raise ConfigError("separability >= 0, missing_cell_rate in [0, 1), categorical_fraction in [0, 1]")

    @property
    def n_total_cols(self):
        return self.n_commentary + self.n_input_cols + self.n_constant + self.n_duplicate + 1

    def to_dict(self):
        return asdict(self)


@dataclass
class GeneratedCohort:
    csv_text: str
    specs_json: str
    truth: np.ndarray  # label of every generated row, file order
    informative: list  # names of the signal-carrying input columns
    config: GeneratorConfig

    def truth_csv(self):
        lines = ["row_index,label"] + [f"{i},{int(v)}" for i, v in enumerate(self.truth)]
        return "\n".join(lines) + "\n"


def _fmt(v):
    return format(float(v), ".10g")


def generate(config=GeneratorConfig()):
    """Build the CSV text, the column-role sidecar and the ground-truth labels."""
    rng = np.random.default_rng(config.seed)
    n, p = config.n_rows, config.n_input_cols

    over_rows = np.sort(rng.choice(n, size=config.n_rows_over_threshold, replace=False))
    survivors = np.setdiff1d(np.arange(n), over_rows)
    truth = np.empty(n, dtype=np.int64)
    survivor_labels = np.array([1] * config.n_responders + [0] * config.n_nonresponders)
    truth[survivors] = rng.permutation(survivor_labels)
    truth[over_rows] = rng.integers(0, 2, size=over_rows.size)

    # class-conditional Gaussians, shifted only on informative columns
    z = rng.standard_normal((n, p))
    informative = np.sort(rng.choice(p, size=config.n_informative, replace=False))
    signs = rng.choice((-1.0, 1.0), size=config.n_informative)
    z[:, informative] += np.outer(truth - 0.5, signs * config.separability)

    n_cat = int(round(config.categorical_fraction * p))
    categorical = rng.choice(p, size=n_cat, replace=False)
    centers = rng.uniform(0.0, 200.0, size=p)
    scales = np.exp(rng.uniform(np.log(0.1), np.log(50.0), size=p))
    values = centers + scales * z
    values[:, 0] = 23000.0 + 4000.0 * z[:, 0]  # an age-in-days style column
    values[:, categorical] = np.clip(np.rint(z[:, categorical]) + 1.0, 0.0, 2.0)
    input_text = np.vectorize(_fmt, otypes=[object])(values)

    # missing cells: survivors stay at or under the threshold, the others exceed it
    for i in survivors:
        hits = np.flatnonzero(rng.random(p) < config.missing_cell_rate)[: config.threshold]
        for j in hits:
            input_text[i, j] = _MISSING_TOKENS[rng.integers(len(_MISSING_TOKENS))]
    for i in over_rows:
        k = int(rng.integers(config.threshold + 1, min(p, config.threshold + 10) + 1))
        for j in rng.choice(p, size=k, replace=False):
            input_text[i, j] = _MISSING_TOKENS[rng.integers(len(_MISSING_TOKENS))]

    input_names = [f"param_{j + 1:02d}" for j in range(p)]
    columns = {name: list(input_text[:, j]) for j, name in enumerate(input_names)}
    specs = {name: ColumnSpec(name, "input") for name in input_names}

    comment_names = ["PatientNumber", "PatientStatus", "Group"] + [
        f"comment_{j + 1:02d}" for j in range(max(config.n_commentary - 3, 0))]
    comment_names = comment_names[: config.n_commentary]
    for j, name in enumerate(comment_names):
        if name == "PatientNumber":
            col = [f"P{i + 1:05d}" for i in range(n)]
        elif name == "PatientStatus":
            col = [_STATUS[k] for k in rng.integers(len(_STATUS), size=n)]
        elif name == "Group":
            col = [f"Arm-{'ABC'[k]}" for k in rng.integers(3, size=n)]
        else:
            col = [f"note-{j}-{k}" for k in rng.integers(1000, size=n)]
        columns[name] = col
        specs[name] = ColumnSpec(name, "commentary")

    const_names = [f"const_{j + 1:02d}" for j in range(config.n_constant)]
    for j, name in enumerate(const_names):
        columns[name] = [_fmt(j + 1.5)] * n
        specs[name] = ColumnSpec(name, "input")

    dup_sources = rng.choice(p, size=config.n_duplicate, replace=False)
    dup_names = [f"derived_{j + 1:02d}" for j in range(config.n_duplicate)]
    dup_columns = {}
    for name, src in zip(dup_names, dup_sources):
        slope, intercept = rng.uniform(0.5, 3.0), rng.uniform(-10.0, 10.0)
        dup_columns[name] = (input_names[src], [_fmt(slope * v + intercept) for v in values[:, src]])
        specs[name] = ColumnSpec(name, "input")

    # column layout: shuffle, then place each copy somewhere after its source
    order = list(rng.permutation(comment_names + input_names + const_names))
    for name, (src, col) in dup_columns.items():
        after = order.index(src) + 1
        order.insert(int(rng.integers(after, len(order) + 1)), name)
        columns[name] = col
    out_name = "Response"
    order.append(out_name)
    columns[out_name] = [str(int(v)) for v in truth]
    specs[out_name] = ColumnSpec(out_name, "output")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(order)
    for i in range(n):
        writer.writerow([columns[name][i] for name in order])

    return GeneratedCohort(
        csv_text=buf.getvalue(),
        specs_json=dump_column_specs([specs[name] for name in order]),
        truth=truth,
        informative=[input_names[j] for j in informative],
        config=config,
    )


def truth_eval(predictions, truth_labels):
    """Score predictions against generator truth rather than file labels."""
    pred = np.asarray(predictions)
    truth = np.asarray(truth_labels)
    if pred.shape != truth.shape:
        raise ContractError(f"length mismatch: {pred.size} predictions vs {truth.size} truth labels")
    return evaluate(pred, truth)
