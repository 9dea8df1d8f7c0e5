import pytest

import helpers


@pytest.fixture(scope="session")
def corpus42():
    return helpers.load_corpus(helpers.GOLDEN_SEED)


@pytest.fixture(scope="session")
def golden_auto(corpus42):
    """One reference auto-gate run shared by read-only assertions."""
    return helpers.run_to_quiescence(helpers.golden_config("auto"), corpus42)
