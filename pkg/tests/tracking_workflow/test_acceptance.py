"""縮小スケールでの学習・追跡の受け入れテスト（`pytest -m slow` で実行）."""

import json
from pathlib import Path

import numpy as np
import pytest
from langgraph.checkpoint.memory import InMemorySaver

from app.domain.enums import TaskStatus
from app.infrastructure.blob_manager import LocalBlobManager
from app.tracking_workflow import pipeline
from app.tracking_workflow.agent import AblationAgent, required_recursion_limit
from app.tracking_workflow.config import RunConfig, load_run_config
from app.tracking_workflow.models.state import AblationAgentInputState, SweepKind
from app.tracking_workflow.nodes import summarize_results, sweep_settings

pytestmark = pytest.mark.slow

DESK_CONFIG = Path(__file__).resolve().parents[2] / "storage" / "configs" / "desk.cfg"
SEEDS = [0, 1, 2]


@pytest.fixture(scope="module")
def desk_config(tmp_path_factory: pytest.TempPathFactory) -> RunConfig:
    root = tmp_path_factory.mktemp("desk")
    return load_run_config(DESK_CONFIG, {"corpus_dir": str(root / "corpus"), "output_dir": str(root / "outputs")})


@pytest.fixture(scope="module")
def trained(desk_config: RunConfig) -> RunConfig:
    blob_manager = LocalBlobManager()
    pipeline.synthesize_corpus(desk_config, blob_manager)
    salnet_dir = pipeline.train_salnet(desk_config, blob_manager, Path(desk_config.output_dir) / "salnet")
    gpgnet_dir = pipeline.train_gpgnet(desk_config, blob_manager, Path(desk_config.output_dir) / "gpgnet")
    return desk_config.model_copy(update={"salnet_checkpoint": str(salnet_dir), "gpgnet_checkpoint": str(gpgnet_dir)})


def _run_sweep(config: RunConfig, sweep: SweepKind, values: list[float] | None = None) -> dict[str, float]:
    out_dir = Path(config.output_dir) / "ablation" / sweep.value
    input_data = AblationAgentInputState(
        sweep=sweep,
        seeds=SEEDS,
        values=values,
        base_config=config.model_dump(mode="json", exclude={"seed"}),
        output_dir=str(out_dir),
    )
    n_settings = len(sweep_settings(sweep, SEEDS, values))
    agent = AblationAgent(LocalBlobManager(), InMemorySaver(), recursion_limit=required_recursion_limit(n_settings))
    result = agent.invoke(input_data.model_dump(), thread_id=sweep.value)
    assert all(r.status == TaskStatus.COMPLETED for r in result["results"]), result["error_messages"]
    return {s.label: s.success_auc_mean for s in summarize_results(result["results"]) if s.success_auc_mean is not None}


def test_attention_localizes_described_object(trained):
    report = json.loads((Path(trained.gpgnet_checkpoint) / "attention_eval.json").read_text(encoding="utf-8"))
    assert report["mean_iou"] >= 0.5
    assert report["preference_rate"] >= 0.9


def test_global_proposals_reacquire_more_often_than_local_only(trained):
    blob_manager = LocalBlobManager()
    rates = {}
    for local_only in (False, True):
        config = trained.model_copy(update={"local_only": local_only, "seed": 7})
        out_dir = Path(trained.output_dir) / ("local" if local_only else "full")
        pipeline.track_corpus(config, blob_manager, out_dir)
        rates[local_only] = pipeline.evaluate_tracks(config, blob_manager, out_dir).reacquisition_rate
    assert rates[False] >= 0.8
    assert rates[False] > rates[True]


def test_tracking_is_reproducible(trained, tmp_path):
    blob_manager = LocalBlobManager()
    config = trained.model_copy(update={"seed": 7, "n_test_sequences": 3})
    first = pipeline.track_corpus(config, blob_manager, tmp_path / "a").out_dir
    second = pipeline.track_corpus(config, blob_manager, tmp_path / "b").out_dir
    for path in sorted(first.glob("*.csv")):
        assert path.read_bytes() == (second / path.name).read_bytes()


def test_graph_and_language_terms_do_not_hurt(desk_config):
    auc = _run_sweep(desk_config, SweepKind.COMPONENTS)
    assert auc["gcn"] >= auc["baseline"]
    assert auc["gcn_triplet"] >= auc["gcn"]


def test_lambda_has_small_effect(desk_config):
    auc = _run_sweep(desk_config, SweepKind.LAMBDA, [0.0, 0.1, 0.5, 1.0])
    reference = auc["lambda_0.1"]
    assert all(np.isfinite(value) for value in auc.values())
    for value in auc.values():
        assert abs(value - reference) <= 0.1 * reference
