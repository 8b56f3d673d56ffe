import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corrnet.synthetic import planted_blocks  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"

_acceptance = []


@pytest.fixture(scope="session")
def planted():
    """10-asset, 500-row returns with two 5-asset blocks, and the true labels."""
    return planted_blocks(rows=500, block_sizes=(5, 5), within=0.7, across=0.1, seed=7)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        tag = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[outcome]
        terminalreporter.write_line(f"{tag}  {name}")
