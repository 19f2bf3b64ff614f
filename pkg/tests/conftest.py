import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crcmap.domain import ScoreMapSet  # noqa: E402

ACCEPTANCE_LINES = []


def flat(scores, labels):
    return ScoreMapSet.from_flat(np.asarray(scores, dtype=np.float32), np.asarray(labels))


@pytest.fixture
def make_flat():
    return flat


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
