import os
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

from seizurebench.dataset import N_FEATURES, RawDataset, write_csv

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_ENV = "SEIZUREBENCH_DATA"
DEFAULT_DATA = REPO_ROOT / "data" / "Epileptic Seizure Recognition.csv"


def real_dataset_path():
    """Location of the real UCI CSV, or None when it is not available."""
    p = Path(os.environ.get(DATA_ENV, DEFAULT_DATA))
    return p if p.is_file() else None


def make_uci_like(per_class, seed=0, n_features=N_FEATURES):
    """Synthetic table in the UCI layout: class 1 windows carry large, fast
    oscillations, classes 2-5 smaller ones of varying frequency."""
    rng = np.random.default_rng(seed)
    t = np.arange(n_features)
    rows, labels, ids = [], [], []
    for label in (1, 2, 3, 4, 5):
        amp = 400.0 if label == 1 else 40.0 + 15.0 * label
        freq = rng.uniform(0.05, 0.4, per_class) * (2.0 if label == 1 else 1.0)
        phase = rng.uniform(0, 2 * np.pi, per_class)
        a = amp * rng.uniform(0.5, 1.5, per_class)
        x = a[:, None] * np.sin(freq[:, None] * t + phase[:, None])
        x += rng.normal(0, 20.0, (per_class, n_features))
        rows.append(np.round(x))
        labels += [label] * per_class
        ids += [f"X{i}.V{label}.{rng.integers(1, 999)}" for i in range(per_class)]
    order = rng.permutation(len(labels))
    X = np.concatenate(rows)[order]
    return RawDataset(
        row_ids=tuple(ids[i] for i in order),
        features=X,
        labels=np.asarray(labels)[order],
    )


@pytest.fixture(scope="session")
def small_csv(tmp_path_factory):
    """40 rows per class, written in the UCI column layout."""
    path = tmp_path_factory.mktemp("data") / "small.csv"
    write_csv(make_uci_like(40, seed=3), path)
    return path


# ---- acceptance summary: one line per criterion --------------------------------

_criteria = {}
_outcomes = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    _criteria[number] = title
    if rep.when == "call" or rep.skipped or rep.failed:
        reason = ""
        if rep.skipped and isinstance(rep.longrepr, tuple):
            reason = rep.longrepr[2].removeprefix("Skipped: ")
        _outcomes[number].append((rep.outcome, reason))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        results = _outcomes[number]
        states = {o for o, _ in results}
        if "failed" in states:
            status = "FAIL"
        elif states == {"skipped"}:
            status = "SKIP"
        else:
            status = "PASS"
        line = f"criterion {number:2d} {status}  {_criteria[number]}"
        reasons = {r for o, r in results if o == "skipped" and r}
        if status == "SKIP" and reasons:
            line += f"  ({'; '.join(sorted(reasons))})"
        terminalreporter.write_line(line)
