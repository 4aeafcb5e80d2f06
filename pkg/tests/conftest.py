import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from metacore import Store


@pytest.fixture
def store():
    return Store()


@pytest.fixture
def run():
    """Execute request lines against a store, returning response lines."""
    from metacore import execute_line

    def _run(target_store, *lines):
        return [execute_line(line, target_store) for line in lines]

    return _run
