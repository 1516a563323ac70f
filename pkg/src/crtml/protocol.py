"""Repeated stratified holdout shared by the supervised experiments."""

import hashlib
from dataclasses import asdict, dataclass

from .cohort import normalize_split, stratified_split
from .errors import ConfigError
from .metrics import average_results, evaluate


def derive_seed(master_seed, tag, index=0):
    """Stable 63-bit seed from ``(master_seed, tag, index)``."""
    digest = hashlib.blake2b(f"{int(master_seed)}:{tag}:{int(index)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@dataclass(frozen=True)
class Protocol:
    repeats: int = 5
    split_fraction: float = 0.70
    seed: int = 0
    normalization: str = "min_max"

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError("split_fraction must lie in (0, 1)")

    def to_dict(self):
        return asdict(self)


def holdout_splits(cohort, protocol, tag="split"):
    """Yield ``(rep, train, test)`` with train-fitted normalization applied."""
    for rep in range(protocol.repeats):
        train, test = stratified_split(cohort, protocol.split_fraction, derive_seed(protocol.seed, tag, rep))
        train, test, _ = normalize_split(train, test, protocol.normalization)
        yield rep, train, test


def repeated_holdout(cohort, protocol, fit_predict, tag="split"):
    """Run ``fit_predict(train, test, rep) -> predictions`` per repetition.

    Returns the per-repetition :class:`EvalResult` list and their average.
    """
    runs = []
    for rep, train, test in holdout_splits(cohort, protocol, tag):
        runs.append(evaluate(fit_predict(train, test, rep), test.labels))
    return runs, average_results(runs)
