from __future__ import annotations

import numpy as np
import pytest

from stmodel.config import ArchConfig
from synthcorpus.config import SynthConfig
from synthcorpus.generator import generate

TINY_SYNTH = dict(
    n_phones=6,
    lexicon_size=12,
    word_phones_min=2,
    word_phones_max=3,
    sentence_min=2,
    sentence_max=4,
    duration_min=3,
    duration_max=6,
    duration_mean=4.0,
    feature_dim=8,
    n_speakers=2,
    train_size=24,
    dev_size=6,
    test_size=6,
    seed=3,
)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_arch() -> ArchConfig:
    return ArchConfig(
        hidden=4,
        encoder_layers=3,
        downsample_after=[1, 2],
        attention_units=4,
        embedding_dim=4,
        dropout=0.0,
        embedding_dropout=0.0,
        label_smoothing=0.0,
    )


@pytest.fixture
def synth_config() -> SynthConfig:
    return SynthConfig(**TINY_SYNTH)


@pytest.fixture(scope="session")
def tiny_corpus():
    return generate(SynthConfig(**TINY_SYNTH))
