import os

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import pytest

from ravenlab.puzzles import Config, generate_puzzle


@pytest.fixture(scope="session")
def puzzle_bank():
    """Twenty instances per layout, fixed seeds, shared across tests."""
    return {
        config: [generate_puzzle(config, seed) for seed in range(20)]
        for config in Config
    }
