import json
import sys
from pathlib import Path

import numpy as np
import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))

from gitfixture import build_e2e_repo  # noqa: E402
from refpred.catalog import catalog_for  # noqa: E402
from refpred.store import append_instances, init_dataset  # noqa: E402
from refpred.taxonomy import ElementKey, ElementLevel, LabeledInstance, RefactoringType  # noqa: E402

METRIC_FIXTURES = TESTS_DIR / "fixtures" / "metrics"

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    number, title = marker
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "seconds": 0.0})
    entry["passed"] = entry["passed"] and report.outcome == "passed"
    entry["seconds"] += report.duration


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report._criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}  ({entry['seconds']:.2f}s)")


def metric_fixture_names() -> list[str]:
    return sorted(p.stem for p in METRIC_FIXTURES.glob("*.java"))


def load_metric_fixture(name: str):
    source = (METRIC_FIXTURES / f"{name}.java").read_text()
    oracle = json.loads((METRIC_FIXTURES / f"{name}.json").read_text())
    return source, oracle


def two_blobs(n: int = 200, seed: int = 0, separation: float = 8.0, dims: int = 2):
    """Two unit-variance Gaussian blobs whose centres sit ``separation`` sigma apart."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = np.vstack([rng.normal(0.0, 1.0, (half, dims)), rng.normal(0.0, 1.0, (n - half, dims))])
    X[half:, 0] += separation
    y = np.r_[np.zeros(half, dtype=int), np.ones(n - half, dtype=int)]
    return X, y


def synthetic_instances(n_pos, n_neg, refactoring, seed=0, shift=3.0, include_history=False, start_ts=1_000):
    """Gaussian feature vectors; positives are shifted on the first four features."""
    level = refactoring.level
    size = len(catalog_for(level, include_history))
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_pos + n_neg):
        positive = i < n_pos
        vec = rng.normal(0.0, 1.0, size)
        if positive:
            vec[:4] += shift
        key = ElementKey("syn", f"c{i:05d}", f"src/F{i}.java", f"app.F{i}",
                         "m()" if level is not ElementLevel.CLASS else None,
                         "v" if level is ElementLevel.VARIABLE else None)
        out.append(LabeledInstance(key, level, refactoring if positive else None, vec.tolist(), start_ts + i))
    return out


def make_dataset(path, n_pos, n_neg, refactoring=RefactoringType.EXTRACT_CLASS, seed=0, shift=3.0, source="syn",
                 include_history=False):
    init_dataset(path, source, 50, include_history, created=0, reset=True)
    append_instances(path, synthetic_instances(n_pos, n_neg, refactoring, seed, shift, include_history))
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def e2e_repo(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    hashes, records = build_e2e_repo(root / "repo")
    detections = root / "detections.jsonl"
    detections.write_text("".join(json.dumps(r) + "\n" for r in records))
    return root / "repo", detections, hashes
