"""End-to-end stages shared by the command line and the ablation graph."""

from dataclasses import dataclass
from pathlib import Path

from app.core.exception import ConfigError
from app.core.logging import LogLevel, log
from app.core.utils.datetime_utils import get_run_stamp
from app.core.utils.nano_id import generate_id
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.config import RunConfig
from app.tracking_workflow.evaluation import EvaluationReport, RunEvaluator
from app.tracking_workflow.gpgnet.trainer import GpgnetTrainer, evaluate_attention, load_gpgnet
from app.tracking_workflow.language import Vocabulary
from app.tracking_workflow.salnet import SalnetTrainer, load_salnet
from app.tracking_workflow.synthcorpus import (
    TEST_SPLIT,
    TRAIN_SPLIT,
    CorpusStore,
    SequenceData,
    evaluation_scenes,
    training_scenes,
)
from app.tracking_workflow.tracker import LanguageTracker, TrackSummary

SUBJECT = "pipeline"


def new_run_dir(root: str | Path, kind: str) -> Path:
    """<root>/<kind>/<タイムスタンプ>_<nanoid>."""
    return Path(root) / kind / f"{get_run_stamp()}_{generate_id()}"


def synthesize_corpus(config: RunConfig, blob_manager: BaseBlobManager) -> CorpusStore:
    """学習・テストの両分割を生成して書き出す."""
    store = CorpusStore(blob_manager, config.corpus_dir)
    shape = dict(height=config.frame_height, width=config.frame_width, n_frames=config.frames_per_sequence)
    store.write_split(TRAIN_SPLIT, training_scenes(config.n_train_sequences, config.seed, **shape))
    store.write_split(TEST_SPLIT, evaluation_scenes(config.n_test_sequences, config.seed, **shape))
    return store


def corpus_vocabulary(sequences: list[SequenceData]) -> Vocabulary:
    return Vocabulary.from_sentences(sequence.sentence for sequence in sequences)


def train_salnet(config: RunConfig, blob_manager: BaseBlobManager, run_dir: str | Path) -> Path:
    sequences = CorpusStore(blob_manager, config.corpus_dir).load_split(TRAIN_SPLIT, config.n_train_sequences)
    result = SalnetTrainer(config, blob_manager).train(sequences, corpus_vocabulary(sequences), run_dir)
    assert result.run_dir is not None
    return result.run_dir


def train_gpgnet(config: RunConfig, blob_manager: BaseBlobManager, run_dir: str | Path) -> Path:
    store = CorpusStore(blob_manager, config.corpus_dir)
    sequences = store.load_split(TRAIN_SPLIT, config.n_train_sequences)
    result = GpgnetTrainer(config, blob_manager).train(sequences, corpus_vocabulary(sequences), run_dir)
    held_out = store.load_split(TEST_SPLIT, config.n_test_sequences)
    report = evaluate_attention(result.model, held_out, result.vocab, config.attention_threshold)
    log(LogLevel.INFO, SUBJECT, "train_gpgnet", (
        f"held-out attention IoU={report.mean_iou:.3f} "
        f"described>distractor={report.preference_rate:.3f} ({report.distractor_frames} frames)"
    ))
    assert result.run_dir is not None
    blob_manager.save_blob_as_json(
        {
            "mean_iou": report.mean_iou,
            "preference_rate": report.preference_rate,
            "frames": report.frames,
            "distractor_frames": report.distractor_frames,
        },
        result.run_dir / "attention_eval.json",
    )
    return result.run_dir


@dataclass
class TrackRun:
    out_dir: Path
    summaries: list[TrackSummary]


def track_corpus(
    config: RunConfig,
    blob_manager: BaseBlobManager,
    out_dir: str | Path,
    split: str = TEST_SPLIT,
    sequence: str | None = None,
    overlay: bool = False,
) -> TrackRun:
    """学習済みモデルで1シーケンスまたは分割全体を追跡し、CSVを書き出す."""
    if config.salnet_checkpoint is None:
        raise ConfigError(SUBJECT, "salnet_checkpoint", "a trained SALNet run directory is required")
    salnet, vocab = load_salnet(blob_manager, config.salnet_checkpoint)
    attention_model = None
    if config.gpgnet_checkpoint is not None and not config.local_only:
        attention_model, vocab = load_gpgnet(blob_manager, config.gpgnet_checkpoint)
    elif not config.local_only:
        log(LogLevel.WARNING, SUBJECT, "track", "no GPGNet checkpoint, tracking with local proposals only")

    store = CorpusStore(blob_manager, config.corpus_dir)
    sequences = (
        [store.load_sequence(split, sequence)] if sequence else store.load_split(split, config.n_test_sequences)
    )
    tracker = LanguageTracker(config, salnet, vocab, blob_manager, attention_model)
    summaries = []
    for item in sequences:
        result = tracker.run(item, overlay=overlay)
        tracker.save(result, out_dir)
        summaries.append(result.summary)
    return TrackRun(out_dir=Path(out_dir), summaries=summaries)


def evaluate_tracks(
    config: RunConfig,
    blob_manager: BaseBlobManager,
    tracks_dir: str | Path,
    split: str = TEST_SPLIT,
    label: str | None = None,
    out_dir: str | Path | None = None,
) -> EvaluationReport:
    """追跡結果のあるシーケンスだけを評価し、レポートを書き出す."""
    store = CorpusStore(blob_manager, config.corpus_dir)
    tracks_dir = Path(tracks_dir)
    names = [n for n in store.sequence_names(split) if blob_manager.exists(tracks_dir / f"{n}.csv")]
    evaluator = RunEvaluator(blob_manager)
    report, success, precision = evaluator.evaluate(
        tracks_dir, [store.load_sequence(split, n) for n in names], label
    )
    evaluator.save(report, success, precision, out_dir or tracks_dir / "evaluation")
    return report
