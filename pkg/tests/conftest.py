from pathlib import Path

import numpy as np
import pytest

from app.core.config import settings
from app.infrastructure.blob_manager import LocalBlobManager
from app.tracking_workflow.config import RunConfig
from app.tracking_workflow.language import Vocabulary
from app.tracking_workflow.synthcorpus import (
    TEST_SPLIT,
    TRAIN_SPLIT,
    CorpusStore,
    SceneKind,
    SequenceData,
    evaluation_scenes,
    generate_sequence,
    random_scene,
    template_words,
    training_scenes,
)

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(autouse=True)
def _template_dir(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(settings, "TEMPLATE_DIR", str(REPO_ROOT / "storage" / "templates"))


@pytest.fixture
def config_dir() -> Path:
    return REPO_ROOT / "storage" / "configs"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def blob_manager() -> LocalBlobManager:
    return LocalBlobManager()


@pytest.fixture
def tiny_config(tmp_path: Path) -> RunConfig:
    """数秒で学習・追跡が一巡する大きさの設定."""
    return RunConfig(
        seed=3,
        width_scale=8 / 512,
        fc_ratio=2,
        patch_size=16,
        conv_channels=(4, 4, 4),
        node_count=8,
        salnet_batch_graphs=2,
        salnet_iterations=3,
        salnet_lr=1e-3,
        frame_height=48,
        frame_width=64,
        encoder_channels=(4, 4, 4),
        gpgnet_lr=1e-2,
        gpgnet_batch_size=4,
        gpgnet_epochs=1,
        gpgnet_frames_per_sequence=2,
        n_local=32,
        n_per_region=4,
        max_global=16,
        pool_size=48,
        n_init_pos=20,
        n_init_neg=60,
        init_steps=2,
        n_update_pos=5,
        n_update_neg=10,
        update_steps=1,
        long_interval=3,
        long_memory=5,
        short_memory=3,
        online_batch_pos=8,
        online_batch_neg=16,
        n_train_sequences=4,
        n_test_sequences=2,
        frames_per_sequence=12,
        corpus_dir=str(tmp_path / "corpus"),
        output_dir=str(tmp_path / "outputs"),
        log_every=1,
    )


@pytest.fixture
def vocab() -> Vocabulary:
    return Vocabulary(template_words())


@pytest.fixture
def plain_sequence() -> SequenceData:
    return generate_sequence(random_scene(SceneKind.PLAIN, 11, "plain", n_frames=12))


@pytest.fixture
def out_of_view_sequence() -> SequenceData:
    return generate_sequence(evaluation_scenes(1, 5, n_frames=24)[0])


@pytest.fixture
def train_sequences(tiny_config: RunConfig) -> list[SequenceData]:
    scenes = training_scenes(tiny_config.n_train_sequences, 0, n_frames=tiny_config.frames_per_sequence)
    return [generate_sequence(scene) for scene in scenes]


@pytest.fixture
def tiny_corpus(tiny_config: RunConfig, blob_manager: LocalBlobManager) -> CorpusStore:
    store = CorpusStore(blob_manager, tiny_config.corpus_dir)
    n = tiny_config.frames_per_sequence
    store.write_split(TRAIN_SPLIT, training_scenes(tiny_config.n_train_sequences, 0, n_frames=n))
    store.write_split(TEST_SPLIT, evaluation_scenes(tiny_config.n_test_sequences, 0, n_frames=n))
    return store
