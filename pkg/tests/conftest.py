"""Shared fixtures: tiny synthetic datasets and a small trained checkpoint."""

import pytest

from seqclr.checkpoint import save_checkpoint
from seqclr.dataio import SyntheticSpec, generate_synthetic
from seqclr.layers import ModelConfig, build_model
from seqclr.tensor import Rng


def small_model_config(**kw):
    base = dict(attention="bahdanau", conv_channels=(2, 3), lstm_hidden=8,
                attn_dim=4, coattn_dim=4, sequence_length=20, dtype="float32")
    base.update(kw)
    return ModelConfig(**base)


@pytest.fixture(scope="session")
def tiny_dataset_dir(tmp_path_factory):
    """12 videos (3 per class), 40 frames each, with a manifest."""
    out = tmp_path_factory.mktemp("tinydata")
    generate_synthetic(SyntheticSpec(per_class=3, frames=40), seed=11, out_dir=out)
    return out


@pytest.fixture(scope="session")
def small_dataset_dir(tmp_path_factory):
    """16 videos (4 per class): enough for a 25% video-level test split."""
    out = tmp_path_factory.mktemp("smalldata")
    generate_synthetic(SyntheticSpec(per_class=4, frames=40), seed=13, out_dir=out)
    return out


@pytest.fixture(scope="session")
def small_model():
    return build_model(small_model_config(), Rng(5), head_init="glorot")


@pytest.fixture(scope="session")
def small_checkpoint(tmp_path_factory, small_model):
    path = tmp_path_factory.mktemp("ck") / "small.ckpt"
    save_checkpoint(path, small_model, metadata={"phase": "test-fixture"})
    return path
