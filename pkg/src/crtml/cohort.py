"""Raw patient table ingestion and the preprocessing pipeline.

Pipeline order is fixed: filter rows -> drop commentary -> drop constant ->
drop duplicate -> impute -> normalize.
"""

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParseError, PreprocessError, SchemaError, SplitError

ROLES = ("input", "output", "commentary")
DEFAULT_ILLEGITIMATE = frozenset({"", "na", "nan"})
CONSTANT_TOL = 1e-12
CORRELATION_TOL = 1e-12


@dataclass
class RawTable:
    column_names: list
    cells: list  # row-major list of token lists

    def __post_init__(self):
        seen = set()
        for name in self.column_names:
            if name in seen:
                raise SchemaError(f"duplicate column name {name!r}")
            seen.add(name)
        for i, row in enumerate(self.cells):
            if len(row) != len(self.column_names):
                raise ParseError(f"expected {len(self.column_names)} cells, got {len(row)}", line=i + 2)

    @property
    def n_rows(self):
        return len(self.cells)

    @property
    def n_cols(self):
        return len(self.column_names)

    def column(self, name):
        j = self.column_names.index(name)
        return [row[j] for row in self.cells]

    def select_columns(self, names):
        idx = [self.column_names.index(n) for n in names]
        return RawTable(list(names), [[row[j] for j in idx] for row in self.cells])

    def select_rows(self, rows):
        return RawTable(list(self.column_names), [self.cells[i] for i in rows])


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    role: str = "input"
    illegitimate_tokens: frozenset = DEFAULT_ILLEGITIMATE

    def __post_init__(self):
        if self.role not in ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")
        lowered = frozenset(t.strip().lower() for t in self.illegitimate_tokens) | {""}
        object.__setattr__(self, "illegitimate_tokens", lowered)

    def is_marked_missing(self, token):
        return token.strip().lower() in self.illegitimate_tokens

    def is_illegitimate(self, token):
        if self.is_marked_missing(token):
            return True
        if self.role == "commentary":
            return False
        return _to_float(token) is None


@dataclass
class Cohort:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list
    label_name: str = "response"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[1] < 1:
            raise PreprocessError("cohort needs a 2-D feature matrix with at least one column")
        if self.features.shape[0] != self.labels.shape[0]:
            raise PreprocessError("label count must equal row count")
        if len(self.feature_names) != self.features.shape[1]:
            raise PreprocessError("feature_names length must equal column count")
        if np.isnan(self.features).any():
            raise PreprocessError("cohort contains missing entries")
        if not np.isin(self.labels, (0, 1)).all():
            raise PreprocessError("labels must be 0/1")

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, rows):
        return Cohort(self.features[rows], self.labels[rows], list(self.feature_names), self.label_name)

    def class_counts(self):
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))


@dataclass
class NumericTable:
    """Input columns as floats; NaN marks an illegitimate cell."""

    names: list
    values: np.ndarray

    def select(self, keep):
        return NumericTable([self.names[j] for j in keep], self.values[:, keep])


@dataclass
class PreprocessReport:
    rows_in: int
    rows_dropped_missing: int
    rows_out: int
    cols_in: int
    cols_commentary: int
    cols_constant: int
    cols_duplicate: int
    cols_out: int
    imputed_cells: int
    normalization: str
    n_input_features: int = 0
    kept_row_indices: list = field(default_factory=list)
    dropped_columns: dict = field(default_factory=dict)

    def check(self):
        if self.cols_out != self.cols_in - self.cols_commentary - self.cols_constant - self.cols_duplicate:
            raise PreprocessError("column bookkeeping does not add up")
        if self.rows_out != self.rows_in - self.rows_dropped_missing:
            raise PreprocessError("row bookkeeping does not add up")
        if len(self.kept_row_indices) != self.rows_out:
            raise PreprocessError("kept row index list has the wrong length")
        return self

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PreprocessConfig:
    threshold: int = 10
    normalization: str = "min_max"  # or "z_score"
    fit_on: str = "train_only"  # or "all"

    def __post_init__(self):
        if self.threshold < 0:
            raise PreprocessError("threshold must be >= 0")
        if self.normalization not in ("min_max", "z_score"):
            raise PreprocessError(f"unknown normalization {self.normalization!r}")
        if self.fit_on not in ("train_only", "all"):
            raise PreprocessError(f"unknown fit_on {self.fit_on!r}")


def _to_float(token):
    try:
        value = float(token)
    except (TypeError, ValueError):
        return None
    return value if math.isfinite(value) else None


def parse_table(csv_text):
    """Parse header + rows into a :class:`RawTable` of raw string tokens."""
    reader = csv.reader(io.StringIO(csv_text))
    header = None
    rows = []
    for record in reader:
        if not record:
            continue
        if header is None:
            header = [h.strip() for h in record]
            if len(set(header)) != len(header):
                dupes = sorted({h for h in header if header.count(h) > 1})
                raise SchemaError(f"duplicate header names: {', '.join(dupes)}")
            continue
        if len(record) != len(header):
            raise ParseError(f"expected {len(header)} cells, got {len(record)}", line=reader.line_num)
        rows.append(record)
    if header is None:
        raise ParseError("missing header row", line=1)
    return RawTable(header, rows)


def load_column_specs(json_text):
    """Read the JSON sidecar: a list of ``{name, role, illegitimate_tokens?}``."""
    entries = json.loads(json_text)
    if not isinstance(entries, list):
        raise SchemaError("column spec sidecar must be a JSON list")
    specs = []
    for entry in entries:
        tokens = entry.get("illegitimate_tokens")
        kwargs = {} if tokens is None else {"illegitimate_tokens": frozenset(tokens)}
        specs.append(ColumnSpec(entry["name"], entry.get("role", "input"), **kwargs))
    return specs


def dump_column_specs(specs):
    out = []
    for s in specs:
        entry = {"name": s.name, "role": s.role}
        if s.illegitimate_tokens != DEFAULT_ILLEGITIMATE:
            entry["illegitimate_tokens"] = sorted(s.illegitimate_tokens - {""})
        out.append(entry)
    return json.dumps(out, indent=1)


def _spec_map(table, specs):
    by_name = {}
    for s in specs:
        if s.name in by_name:
            raise SchemaError(f"column {s.name!r} specified twice")
        by_name[s.name] = s
    missing = [n for n in table.column_names if n not in by_name]
    if missing:
        raise SchemaError(f"no column spec for: {', '.join(missing)}")
    outputs = [s.name for s in specs if s.role == "output" and s.name in table.column_names]
    if len(outputs) != 1:
        raise SchemaError(f"exactly one output column required, found {len(outputs)}")
    return by_name


def illegitimate_counts(table, specs):
    by_name = _spec_map(table, specs)
    col_specs = [by_name[n] for n in table.column_names]
    return [sum(s.is_illegitimate(tok) for s, tok in zip(col_specs, row)) for row in table.cells]


def filter_incomplete_rows(table, specs, threshold=10):
    """Drop rows with more than ``threshold`` illegitimate cells.

    Rows whose output cell is illegitimate are dropped too; a label cannot be
    imputed. Returns the filtered table and the dropped row indices.
    """
    if threshold < 0:
        raise PreprocessError("threshold must be >= 0")
    by_name = _spec_map(table, specs)
    out_name = next(s.name for s in specs if s.role == "output" and s.name in by_name and s.name in table.column_names)
    out_j = table.column_names.index(out_name)
    out_spec = by_name[out_name]
    counts = illegitimate_counts(table, specs)
    kept, dropped = [], []
    for i, (row, c) in enumerate(zip(table.cells, counts)):
        if c > threshold or out_spec.is_illegitimate(row[out_j]):
            dropped.append(i)
        else:
            kept.append(i)
    return table.select_rows(kept), dropped


def drop_commentary_columns(table, specs):
    by_name = _spec_map(table, specs)
    keep = [n for n in table.column_names if by_name[n].role != "commentary"]
    if len(keep) == table.n_cols:
        return table
    return table.select_columns(keep)


def to_numeric(table, specs):
    """Split a commentary-free table into input :class:`NumericTable` and raw labels."""
    by_name = _spec_map(table, specs)
    inputs = [n for n in table.column_names if by_name[n].role == "input"]
    if any(by_name[n].role == "commentary" for n in table.column_names):
        raise SchemaError("drop commentary columns before numeric conversion")
    out_name = next(n for n in table.column_names if by_name[n].role == "output")
    values = np.full((table.n_rows, len(inputs)), np.nan)
    idx = [table.column_names.index(n) for n in inputs]
    for i, row in enumerate(table.cells):
        for k, j in enumerate(idx):
            tok = row[j]
            if not by_name[inputs[k]].is_marked_missing(tok):
                v = _to_float(tok)
                if v is not None:
                    values[i, k] = v
    labels = []
    for tok in table.column(out_name):
        v = _to_float(tok)
        if v not in (0.0, 1.0):
            raise PreprocessError(f"output column {out_name!r} has non-binary value {tok!r}")
        labels.append(int(v))
    return NumericTable(inputs, values), np.asarray(labels, dtype=np.int64), out_name


def drop_constant_columns(table):
    keep, dropped = [], []
    for j, name in enumerate(table.names):
        observed = table.values[:, j]
        observed = observed[~np.isnan(observed)]
        if observed.size and observed.max() - observed.min() <= CONSTANT_TOL:
            dropped.append(name)
        else:
            keep.append(j)
    return table.select(keep), dropped


def pearson(x, y):
    """Pearson correlation over rows where both values are present; NaN if undefined."""
    mask = ~(np.isnan(x) | np.isnan(y))
    if mask.sum() < 2:
        return float("nan")
    dx = x[mask] - x[mask].mean()
    dy = y[mask] - y[mask].mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        return float("nan")
    return float(dx @ dy) / denom


def drop_duplicate_columns(table):
    """Drop every column perfectly positively correlated with an earlier kept one."""
    keep, dropped = [], []
    for j, name in enumerate(table.names):
        col = table.values[:, j]
        if any(abs(pearson(table.values[:, k], col) - 1.0) <= CORRELATION_TOL for k in keep):
            dropped.append(name)
        else:
            keep.append(j)
    return table.select(keep), dropped


def impute_mean(table):
    values = table.values.copy()
    missing = np.isnan(values)
    for j, name in enumerate(table.names):
        col_missing = missing[:, j]
        if col_missing.all():
            raise PreprocessError(f"column {name!r} has no legitimate values to impute from")
        if col_missing.any():
            values[col_missing, j] = values[~col_missing, j].mean()
    return NumericTable(list(table.names), values), int(missing.sum())


@dataclass
class Normalizer:
    """Per-column affine map ``(x - offset) / scale``; zero scale maps to 0."""

    mode: str
    offset: np.ndarray
    scale: np.ndarray
    degenerate: list = field(default_factory=list)

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        safe = np.where(self.scale == 0.0, 1.0, self.scale)
        out = (X - self.offset) / safe
        out[:, self.scale == 0.0] = 0.0
        return out

    def to_dict(self):
        return {"mode": self.mode, "offset": self.offset.tolist(),
                "scale": self.scale.tolist(), "degenerate": list(self.degenerate)}


def fit_normalizer(X, mode="min_max", names=None, strict=True):
    X = np.asarray(X, dtype=np.float64)
    if mode == "min_max":
        offset = X.min(axis=0)
        scale = X.max(axis=0) - offset
    elif mode == "z_score":
        offset = X.mean(axis=0)
        scale = X.std(axis=0)
    else:
        raise PreprocessError(f"unknown normalization {mode!r}")
    names = names or [f"x{j}" for j in range(X.shape[1])]
    degenerate = [names[j] for j in np.flatnonzero(scale == 0.0)]
    if degenerate:
        msg = f"zero-range columns under {mode}: {', '.join(degenerate)}"
        if strict:
            raise PreprocessError(msg)
        warnings.warn(msg + " (mapped to 0)", RuntimeWarning, stacklevel=2)
    return Normalizer(mode, offset, scale, degenerate)


def normalize(cohort, mode="min_max", fit_rows=None):
    """Normalize ``cohort`` with parameters fit on ``fit_rows`` (all rows if None).

    A zero-range column is an error when fitting on all rows; on a row subset it
    maps to a constant 0 with a warning.
    """
    fit_all = fit_rows is None
    fit_X = cohort.features if fit_all else cohort.features[fit_rows]
    norm = fit_normalizer(fit_X, mode, cohort.feature_names, strict=fit_all)
    return Cohort(norm.transform(cohort.features), cohort.labels.copy(),
                  list(cohort.feature_names), cohort.label_name), norm


def normalize_split(train, test, mode="min_max"):
    """Fit on ``train`` only and apply the same map to ``test``."""
    norm = fit_normalizer(train.features, mode, train.feature_names, strict=False)
    return (Cohort(norm.transform(train.features), train.labels, list(train.feature_names), train.label_name),
            Cohort(norm.transform(test.features), test.labels, list(test.feature_names), test.label_name),
            norm)


def stratified_split_indices(labels, train_fraction, seed):
    if not 0.0 < train_fraction < 1.0:
        raise SplitError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            raise SplitError(f"class {cls} has {members.size} member(s); need at least 2")
        shuffled = rng.permutation(members)
        k = math.floor(train_fraction * members.size + 1e-9)
        train.append(shuffled[:k])
        test.append(shuffled[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(cohort, train_fraction, seed):
    train_idx, test_idx = stratified_split_indices(cohort.labels, train_fraction, seed)
    return cohort.subset(train_idx), cohort.subset(test_idx)


def preprocess(table, specs, config=PreprocessConfig()):
    """Run the full pipeline; returns ``(Cohort, PreprocessReport)``."""
    cols_in = table.n_cols
    filtered, dropped_rows = filter_incomplete_rows(table, specs, config.threshold)
    no_comment = drop_commentary_columns(filtered, specs)
    commentary = [n for n in table.column_names if n not in no_comment.column_names]
    numeric, labels, out_name = to_numeric(no_comment, specs)
    numeric, constant = drop_constant_columns(numeric)
    numeric, duplicate = drop_duplicate_columns(numeric)
    numeric, imputed = impute_mean(numeric)
    if labels.size == 0:
        raise PreprocessError("no rows survive row filtering")
    cohort = Cohort(numeric.values, labels, list(numeric.names), out_name)

    if config.fit_on == "all":
        cohort, _ = normalize(cohort, config.normalization)
        tag = f"{config.normalization}/all"
    else:
        tag = f"{config.normalization}/train_only (deferred)"

    dropped_set = set(dropped_rows)
    report = PreprocessReport(
        rows_in=table.n_rows,
        rows_dropped_missing=len(dropped_rows),
        rows_out=cohort.n_rows,
        cols_in=cols_in,
        cols_commentary=len(commentary),
        cols_constant=len(constant),
        cols_duplicate=len(duplicate),
        cols_out=cohort.n_features + 1,
        imputed_cells=imputed,
        normalization=tag,
        n_input_features=cohort.n_features,
        kept_row_indices=[i for i in range(table.n_rows) if i not in dropped_set],
        dropped_columns={"commentary": commentary, "constant": constant, "duplicate": duplicate},
    )
    return cohort, report.check()


def cohort_to_csv(cohort):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(cohort.feature_names) + [cohort.label_name])
    for row, label in zip(cohort.features, cohort.labels):
        writer.writerow([repr(float(v)) for v in row] + [int(label)])
    return buf.getvalue()


def cohort_from_csv(csv_text, label_name=None):
    """Read a preprocessed cohort; the label is the last column unless named."""
    table = parse_table(csv_text)
    label_name = label_name or table.column_names[-1]
    names = [n for n in table.column_names if n != label_name]
    X = np.array([[float(t) for t in row] for row in table.select_columns(names).cells], dtype=np.float64)
    y = np.array([int(float(t)) for t in table.column(label_name)], dtype=np.int64)
    return Cohort(X.reshape(len(y), len(names)), y, names, label_name)
