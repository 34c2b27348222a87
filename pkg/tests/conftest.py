import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from slede import SyntheticConfig, generate_synthetic, split_corpus
from slede.featurize import build_matrix

ONE_PER_LABEL = {
    "reference_word": {"topic": 1.0},
    "backchannels": {"tone": 1.0},
    "tense_choice": {"opening": 1.0},
    "collaborative_finishes": {"closing": 1.0},
}


@pytest.fixture(scope="session")
def planted_corpus():
    """Noise-free corpus with one informative feature per label."""
    cfg = SyntheticConfig(n_dialogues=60, turns_per_dialogue=36, planted_effects=ONE_PER_LABEL)
    return generate_synthetic(cfg, seed=20240605)


@pytest.fixture(scope="session")
def planted_minis(planted_corpus):
    return split_corpus(planted_corpus, max_turns=12)


@pytest.fixture(scope="session")
def planted_matrix(planted_corpus, planted_minis):
    return build_matrix(planted_minis, planted_corpus.registry)
