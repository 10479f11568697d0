import pytest

from extutor.paramgen import tune
from extutor.tasks import TaskKind

BANK_SEED = 2024
BANK_COUNT = 50


@pytest.fixture(scope="session")
def tuned_banks():
    """Full-size tuned banks shared by every test that needs them."""
    return {kind: tune(kind, count=BANK_COUNT, seed=BANK_SEED)
            for kind in TaskKind}
