import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nanosentry.analysis import q_tables  # noqa: E402
from nanosentry.cli import load_scenario  # noqa: E402


@pytest.fixture(scope="session")
def base_cfg():
    return load_scenario("mobile")


@pytest.fixture(scope="session")
def base_tables(base_cfg):
    return q_tables(base_cfg)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            lines += [v for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
