import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from enumerator import enumerate_open  # noqa: E402


@pytest.fixture(scope="session")
def valid_by_order():
    """Every meandric permutation of orders 1..7, keyed by order."""
    return {n: list(enumerate_open(n)) for n in range(1, 8)}
