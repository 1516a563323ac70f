import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crtml.errors import ContractError, UndefinedRateError
from crtml.metrics import (ConfusionMatrix, EvalResult, accuracy, average_results, confusion, evaluate,
                           sensitivity, specificity)


def test_perfect_predictor():
    assert confusion([1, 1, 0, 0], [1, 1, 0, 0]) == ConfusionMatrix(tp=2, fp=0, tn=2, fn=0)


def test_constant_zero_predictor():
    assert confusion([0, 0, 0, 0], [1, 1, 0, 0]) == ConfusionMatrix(tp=0, fp=0, tn=2, fn=2)


def test_mixed_pairs():
    assert confusion([1, 0, 1], [1, 1, 0]) == ConfusionMatrix(tp=1, fp=1, tn=0, fn=1)


@pytest.mark.parametrize("tp,fn,expected", [(75, 25, 0.75), (0, 5, 0.0), (5, 0, 1.0)])
def test_sensitivity(tp, fn, expected):
    assert sensitivity(ConfusionMatrix(tp=tp, fn=fn)) == pytest.approx(expected)


@pytest.mark.parametrize("tn,fp,expected", [(52, 48, 0.52), (0, 3, 0.0), (9, 1, 0.9)])
def test_specificity(tn, fp, expected):
    assert specificity(ConfusionMatrix(tn=tn, fp=fp)) == pytest.approx(expected)


def test_accuracy_examples():
    assert accuracy(ConfusionMatrix(tp=50, tn=50)) == 1.0
    cm = ConfusionMatrix(tp=28, fn=22, tn=29, fp=21)
    assert accuracy(cm) == pytest.approx(0.57)
    assert sensitivity(cm) == pytest.approx(0.56)
    assert specificity(cm) == pytest.approx(0.58)
    assert accuracy(ConfusionMatrix(fp=1, fn=1)) == 0.0


def test_undefined_rates():
    with pytest.raises(UndefinedRateError):
        sensitivity(ConfusionMatrix(tn=3, fp=1))
    with pytest.raises(UndefinedRateError):
        specificity(ConfusionMatrix(tp=3, fn=1))
    with pytest.raises(UndefinedRateError):
        accuracy(ConfusionMatrix())


def test_contract_errors():
    with pytest.raises(ContractError):
        confusion([1, 0], [1])
    with pytest.raises(ContractError):
        confusion([2, 0], [1, 0])
    with pytest.raises(ContractError):
        confusion([], [])
    with pytest.raises(ContractError):
        ConfusionMatrix(tp=-1)
    with pytest.raises(ContractError):
        average_results([])


def _rows(values):
    return [EvalResult(se / 100, sp / 100, acc / 100, ConfusionMatrix()) for acc, sp, se in values]


def test_average_tree_table():
    # exp rows as (accuracy, specificity column, sensitivity column)
    rows = _rows([(89, 86, 91), (85.5, 89, 82), (90, 89, 91), (86, 84, 88), (85.5, 89, 82)])
    avg = average_results(rows)
    assert avg.accuracy * 100 == pytest.approx(87.2, abs=0.05)
    assert avg.specificity * 100 == pytest.approx(87.4, abs=0.05)
    assert avg.sensitivity * 100 == pytest.approx(86.8, abs=0.05)


def test_average_network_table():
    # (acc, % for 0's, % for 1's)
    rows = _rows([(94, 93, 94), (94, 96, 93), (96, 94, 98), (96, 96, 96), (96, 97, 95)])
    avg = average_results(rows)
    for v in (avg.accuracy, avg.sensitivity, avg.specificity):
        assert v * 100 == pytest.approx(95.2, abs=0.05)


def test_average_single_and_counts():
    r = evaluate([1, 0, 1, 0], [1, 0, 0, 0])
    assert average_results([r]) == r
    twice = average_results([r, r])
    assert twice.counts == r.counts + r.counts
    assert EvalResult.from_dict(r.to_dict()) == r


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_counts_match_pair_enumeration(pairs):
    pred, act = zip(*pairs)
    cm = confusion(pred, act)
    tally = {k: 0 for k in itertools.product((0, 1), repeat=2)}
    for p, a in pairs:
        tally[(p, a)] += 1
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == (tally[1, 1], tally[1, 0], tally[0, 0], tally[0, 1])
    assert cm.total == len(pairs)
    assert accuracy(cm) == pytest.approx(np.mean(np.array(pred) == np.array(act)))
