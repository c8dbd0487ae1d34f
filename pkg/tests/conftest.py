import pytest

from emoadapt.backend import TrainConfig
from emoadapt.corpus import Post
from emoadapt.synthdata import synthetic_aligned, write_synthetic_data_dir


@pytest.fixture(scope="session")
def aligned():
    """(emotion corpus, cyberbullying dataset) with the released histogram."""
    return synthetic_aligned(seed=0)


@pytest.fixture(scope="session")
def emotion_corpus(aligned):
    return aligned[0]


@pytest.fixture(scope="session")
def cyber_dataset(aligned):
    return aligned[1]


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """Synthetic harassment/defamation/emotion JSONL files on disk."""
    out = tmp_path_factory.mktemp("data")
    write_synthetic_data_dir(out, seed=0)
    return out


@pytest.fixture(scope="session")
def ref_config():
    """Reference-backend training config; the published 4e-5 rate targets
    transformer fine-tuning and would barely move the linear model."""
    return TrainConfig(learning_rate=0.5, seed=1)


def make_post(pid="p1", text="some text about ##", source="harassment_corpus",
              labels=("clean",)):
    return Post(id=pid, text=text, source=source, raw_labels=tuple(labels))
