import time

import numpy as np
import pytest
from hypothesis import settings

from poselift.animation import species_actions
from poselift.datagen import GenConfig, generate
from poselift.lifter import LifterConfig, train
from poselift.lookup import build
from poselift.skeleton import species_skeleton

settings.register_profile("repo", deadline=None, derandomize=True)
settings.load_profile("repo")

TREND_SEEDS = (0, 1, 2)
TREND_HEADS = (0, 2, 4)
TREND_RECORDS = 2000

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'} | {detail}")


@pytest.fixture(scope="session")
def macaque():
    return species_skeleton("macaque")


@pytest.fixture(scope="session")
def horse():
    return species_skeleton("horse")


@pytest.fixture(scope="session")
def macaque_records(macaque):
    return list(generate(GenConfig(), macaque, species_actions(macaque)))


@pytest.fixture(scope="session")
def macaque_table(macaque_records):
    return build(macaque_records)


@pytest.fixture(scope="session")
def small_records(macaque):
    return list(generate(GenConfig(seed=3, target_count=400), macaque, species_actions(macaque)))


@pytest.fixture(scope="session")
def trend_runs(macaque):
    """Nine 100-epoch runs on a 2000-record set: {(seed, heads): (model, report)} plus runtime."""
    start = time.perf_counter()
    records = list(generate(GenConfig(seed=0, target_count=TREND_RECORDS), macaque, species_actions(macaque)))
    runs = {}
    for seed in TREND_SEEDS:
        for heads in TREND_HEADS:
            runs[seed, heads] = train(records, LifterConfig(heads=heads, seed=seed, epochs=100))
    return runs, time.perf_counter() - start


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
