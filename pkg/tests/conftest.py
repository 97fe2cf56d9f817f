import json
import shutil
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(str(resources.files("smotkit") / "data"))


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def demo_copy(tmp_path):
    """Writable copy of the bundled demo fixtures."""
    out = tmp_path / "fixtures"
    shutil.copytree(DATA, out)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(obj), encoding="utf-8")
    return path


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
