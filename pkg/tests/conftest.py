import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for the acceptance criterion named by the test.

    Tests are named ``test_criterion_NN_...``; a test that errors before
    recording still gets a FAIL line.
    """
    number = int(re.match(r"test_criterion_(\d+)", request.node.name).group(1))
    log = request.config.stash.setdefault(_VERDICTS, [])
    seen = []

    def record(title: str, ok: bool, detail: str = ""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        log.append((number, line))
        seen.append(line)
        print(line)
        assert ok, line

    yield record
    if not seen:
        log.append((number, f"criterion {number:>2} FAIL: raised before a verdict was recorded"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_VERDICTS, [])
    if log:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(log):
            terminalreporter.write_line(line)
