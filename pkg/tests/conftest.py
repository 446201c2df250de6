import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthetic import make_dataset  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    return make_dataset(tmp_path_factory.mktemp("synth"), count=120, seed=3)


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call ``criterion(n, title)`` then ``.detail(text)``."""

    class Recorder:
        def __call__(self, number, title):
            self.number, self.title, self.info = number, title, ""
            return self

        def detail(self, text):
            self.info = text

    rec = Recorder()
    yield rec
    report = getattr(request.node, "rep_call", None)
    passed = report is not None and report.passed
    if not passed and report is not None and report.failed and not rec.info:
        rec.info = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") else ""
    ACCEPTANCE[rec.number] = (passed, rec.title, rec.info)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, title, info = ACCEPTANCE[number]
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title}"
        if info:
            line += f" ({info.splitlines()[0][:200]})"
        terminalreporter.write_line(line)
