from __future__ import annotations

import pytest

from arena_testutil import small_settings
from marena.env import make


@pytest.fixture
def duel_env():
    env = make("duel", small_settings())
    yield env
    env.close()
