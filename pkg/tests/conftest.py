import numpy as np
import pytest

from crtml.cohort import load_column_specs, parse_table, preprocess
from crtml.synth import GeneratorConfig, generate


def build(config):
    gen = generate(config)
    cohort, report = preprocess(parse_table(gen.csv_text), load_column_specs(gen.specs_json))
    return gen, cohort, report


@pytest.fixture(scope="session")
def default_build():
    return build(GeneratorConfig())


@pytest.fixture(scope="session")
def separable_build():
    return build(GeneratorConfig(separability=6.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
