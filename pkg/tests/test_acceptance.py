"""One test per acceptance criterion; each prints its PASS/FAIL line."""

import pytest

from conftest import ACCEPTANCE_LINES
from gfsphere import acceptance


@pytest.mark.parametrize("cid", [c[0] for c in acceptance.CHECKS], ids=lambda i: f"criterion_{i:02d}")
def test_criterion(cid):
    result = acceptance.run_check(cid)
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
