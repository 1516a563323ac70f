"""Two-phase hidden-layer size search and the repeated-holdout network evaluation."""

from dataclasses import asdict, dataclass, field, replace

from .errors import ContractError
from .nn import MlpArchitecture, TrainConfig, init_mlp, predict_batch, train
from .protocol import Protocol, derive_seed, repeated_holdout


def repeated_eval(cohort, arch, protocol=Protocol(), train_config=TrainConfig()):
    """Fresh split, init and training per repetition; returns ``(runs, average)``.

    Splits depend only on the master seed and repetition index, so every
    architecture is evaluated on the same partitions.
    """
    if arch.layer_sizes[0] != cohort.n_features:
        raise ContractError(f"architecture input {arch.layer_sizes[0]} != cohort width {cohort.n_features}")

    def fit_predict(tr, te, rep):
        config = replace(train_config, seed=derive_seed(protocol.seed, "nn-shuffle", rep))
        model = train(init_mlp(arch, derive_seed(protocol.seed, "nn-init", rep), train_config.init_scale), tr, config)
        return predict_batch(model, te.features)

    return repeated_holdout(cohort, protocol, fit_predict, tag="nn-split")


@dataclass
class SearchReport:
    input_width: int
    hidden_activation: str
    phase1: list = field(default_factory=list)  # (hidden_size, EvalResult)
    phase2: dict = field(default_factory=dict)  # first size -> [(second size, EvalResult)]
    selected: MlpArchitecture = None
    protocol: dict = field(default_factory=dict)
    train_config: dict = field(default_factory=dict)

    def candidates(self):
        for h, r in self.phase1:
            yield (h,), r
        for first, points in self.phase2.items():
            for second, r in points:
                yield (first, second), r

    def to_dict(self):
        return {
            "input_width": self.input_width,
            "hidden_activation": self.hidden_activation,
            "protocol": self.protocol,
            "train_config": self.train_config,
            "phase1": [{"hidden": h, **r.to_dict()} for h, r in self.phase1],
            "phase2": {str(f): [{"second": s, **r.to_dict()} for s, r in pts] for f, pts in self.phase2.items()},
            "selected": None if self.selected is None else self.selected.to_dict(),
        }


def default_evaluator(cohort, protocol, train_config, hidden_activation="linear"):
    def evaluate(hidden):
        arch = MlpArchitecture((cohort.n_features, *hidden, 1), hidden_activation)
        return repeated_eval(cohort, arch, protocol, train_config)[1]
    return evaluate


def single_layer_grid(input_width, start=5, step=5, max_size=None):
    """Sizes ``start, start+step, ...`` up to the largest multiple of ``step`` within ``input_width``."""
    if start < 1 or step < 1:
        raise ContractError("start and step must be >= 1")
    cap = max_size if max_size is not None else (input_width // step) * step
    if cap < start:
        raise ContractError(f"grid cap {cap} is below start {start}")
    return list(range(start, cap + 1, step))


def single_layer_sweep(cohort, start=5, step=5, max_size=None, protocol=Protocol(),
                       train_config=TrainConfig(), hidden_activation="linear", evaluate=None):
    evaluate = evaluate or default_evaluator(cohort, protocol, train_config, hidden_activation)
    return [(h, evaluate((h,))) for h in single_layer_grid(cohort.n_features, start, step, max_size)]


def grow_second_layer(first, evaluate, second_start=2, second_step=2, patience=2, max_second=None):
    """Grow the second layer until ``patience`` consecutive steps fail to strictly improve accuracy."""
    if patience < 1 or second_start < 1 or second_step < 1:
        raise ContractError("patience, second_start and second_step must be >= 1")
    points, best, stale = [], float("-inf"), 0
    size = second_start
    while max_second is None or size <= max_second:
        result = evaluate((first, size))
        points.append((size, result))
        if result.accuracy > best:
            best, stale = result.accuracy, 0
        else:
            stale += 1
            if stale >= patience:
                break
        size += second_step
    return points


def two_layer_sweep(cohort, first_sizes=(10, 20, 30, 40), second_start=2, second_step=2, patience=2,
                    max_second=None, protocol=Protocol(), train_config=TrainConfig(),
                    hidden_activation="linear", evaluate=None):
    evaluate = evaluate or default_evaluator(cohort, protocol, train_config, hidden_activation)
    cap = max_second if max_second is not None else cohort.n_features
    return {int(f): grow_second_layer(int(f), evaluate, second_start, second_step, patience, cap)
            for f in first_sizes}


def select_architecture(report):
    """Highest averaged accuracy; ties go to fewer hidden neurons, fewer layers, smaller first layer."""
    candidates = list(report.candidates())
    if not candidates:
        raise ContractError("empty search report")
    hidden, _ = min(candidates, key=lambda c: (-c[1].accuracy, sum(c[0]), len(c[0]), c[0][0]))
    return MlpArchitecture((report.input_width, *hidden, 1), report.hidden_activation)


def architecture_search(cohort, protocol=Protocol(), train_config=TrainConfig(), hidden_activation="linear",
                        start=5, step=5, max_size=None, first_sizes=(10, 20, 30, 40), second_start=2,
                        second_step=2, patience=2, max_second=None, evaluate=None):
    """Both phases always run; the report sets them side by side."""
    evaluate = evaluate or default_evaluator(cohort, protocol, train_config, hidden_activation)
    report = SearchReport(cohort.n_features, hidden_activation, protocol=protocol.to_dict(),
                          train_config=asdict(train_config))
    report.phase1 = single_layer_sweep(cohort, start, step, max_size, evaluate=evaluate)
    report.phase2 = two_layer_sweep(cohort, first_sizes, second_start, second_step, patience, max_second,
                                    evaluate=evaluate)
    report.selected = select_architecture(report)
    return report

