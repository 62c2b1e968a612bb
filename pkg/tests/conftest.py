import random

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from sidedbets.generators import random_prediction, random_sided_table, random_table


# exact arithmetic on deep tables is slow but deterministic
settings.register_profile("exact", deadline=None)
settings.load_profile("exact")


def table_strategy(max_depth=6, min_depth=0):
    """Random fair tables built from a seed and a depth."""
    return st.builds(
        lambda d, seed: random_table(d, random.Random(seed)),
        st.integers(min_depth, max_depth),
        st.integers(0, 2**32),
    )


def sided_pair_strategy(max_depth=6):
    """Two random tables sided for the same random prediction function."""
    def build(d, seed):
        rng = random.Random(seed)
        f = random_prediction(d, rng)
        return f, random_sided_table(d, f, rng), random_sided_table(d, f, rng)

    return st.builds(build, st.integers(1, max_depth), st.integers(0, 2**32))


@pytest.fixture
def rng():
    return random.Random(20240611)
