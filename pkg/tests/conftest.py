import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chansim.bec_analytic import BecCascadeParams, bec_channel, bec_spec, cascade_triple  # noqa: E402
from chansim.prob_core import Pmf  # noqa: E402


@pytest.fixture
def bec075():
    return bec_spec(0.75)


@pytest.fixture
def cascade_star():
    """Erasure cascade at pe = 0.75, p2 = 0.5: I(X;U) = 0.5, I(X,Y;U) = h(0.75)."""
    return cascade_triple(BecCascadeParams(0.75, 0.5))


@pytest.fixture
def bern05():
    return Pmf([0.5, 0.5])


@pytest.fixture
def bec_kernel():
    return bec_channel(0.75)


@pytest.fixture
def workdir(tmp_path):
    """Input files for CLI runs."""
    (tmp_path / "bern05.json").write_text(json.dumps({"probs": [0.5, 0.5]}))
    (tmp_path / "bec075.json").write_text(json.dumps({"kernel": [[0.25, 0.75, 0.0], [0.0, 0.75, 0.25]]}))
    (tmp_path / "ident.json").write_text(json.dumps({"kernel": [[1.0, 0.0], [0.0, 1.0]]}))
    (tmp_path / "indep.json").write_text(json.dumps({"kernel": [[0.3, 0.7], [0.3, 0.7]]}))
    (tmp_path / "star.json").write_text(json.dumps({
        "pU": [0.25, 0.5, 0.25],
        "pXgU": [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]],
        "pYgU": [[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 0.5]],
    }))
    (tmp_path / "lossless.json").write_text(json.dumps({
        "pU": [0.5, 0.5], "pXgU": [[1.0, 0.0], [0.0, 1.0]], "pYgU": [[0.25, 0.75, 0.0], [0.0, 0.75, 0.25]],
    }))
    payoff = np.zeros((2, 2, 2))
    payoff[0, 0, 1] = payoff[1, 1, 0] = 1.0
    (tmp_path / "match.json").write_text(json.dumps({"sizes": [2, 2, 2], "payoff": payoff.ravel().tolist()}))
    (tmp_path / "const.json").write_text(json.dumps({"sizes": [2, 2, 2], "payoff": [0.4] * 8}))
    return tmp_path


ACCEPTANCE_LINES: list[tuple[int, str]] = []


@pytest.fixture
def accept():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(k: int, ok: bool, detail: str):
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE_LINES.append((k, line))
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
