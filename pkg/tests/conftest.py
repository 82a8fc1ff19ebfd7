from __future__ import annotations

import os

import pytest

SLOW = os.environ.get("CAVITYSENSE_SLOW") == "1"


def pytest_collection_modifyitems(config, items):
    if SLOW:
        return
    skip = pytest.mark.skip(reason="long-running; set CAVITYSENSE_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
