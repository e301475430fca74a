import pytest

from app.core.exception import ConfigError
from app.domain.enums import AttentionCue
from app.tracking_workflow.gradient_suite import run_gradient_suite
from run_tracking import main, parse_arguments, parse_overrides, resolve_config


def test_overrides_parse_like_config_lines():
    assert parse_overrides(["triplet_lambda=0.3", "local_only = true"]) == {
        "triplet_lambda": "0.3", "local_only": "true",
    }
    with pytest.raises(ConfigError):
        parse_overrides(["triplet_lambda"])


def test_seed_is_required_for_training_and_tracking(config_dir):
    desk = str(config_dir / "desk.cfg")
    with pytest.raises(ConfigError):
        resolve_config(parse_arguments(["track", "--config", desk]))
    config = resolve_config(parse_arguments(["synth", "--config", desk]))
    assert config.seed == 0


def test_track_flags_map_onto_config(tmp_path):
    args = parse_arguments([
        "track", "--seed", "4", "--salnet", str(tmp_path), "--local-only", "--target-only",
        "--dump-candidates", "--set", "triplet_lambda=0.4",
    ])
    config = resolve_config(args)
    assert config.seed == 4
    assert config.salnet_checkpoint == str(tmp_path)
    assert config.local_only and config.dump_candidates
    assert config.attention_cue == AttentionCue.TARGET_ONLY
    assert config.triplet_lambda == 0.4


def test_cue_flags_are_mutually_exclusive():
    with pytest.raises(SystemExit):
        parse_arguments(["track", "--seed", "1", "--target-only", "--language-only"])


def test_main_reports_errors_with_exit_code(tmp_path):
    assert main(["track", "--seed", "0", "--set", "corpus_dir=" + str(tmp_path)]) == 1
    assert main(["synth", "--set", "not_a_key=1"]) == 1


def test_synth_then_eval_round_trip(tmp_path):
    overrides = [
        "--set", f"corpus_dir={tmp_path / 'corpus'}",
        "--set", "n_train_sequences=2", "--set", "n_test_sequences=1", "--set", "frames_per_sequence=6",
    ]
    assert main(["synth", *overrides]) == 0
    assert (tmp_path / "corpus" / "test" / "test_0000" / "groundtruth.csv").exists()
    assert main(["eval", "--tracks", str(tmp_path / "missing"), *overrides]) == 1


def test_gradient_suite_passes():
    results = run_gradient_suite(seed=0)
    failed = [(r.name, r.max_error) for r in results if not r.passed]
    assert not failed
    assert {"conv2d", "embedding", "enhance_features", "salnet_composite_loss", "gpgnet_encode_decode"} <= {r.name for r in results}


@pytest.mark.parametrize("sweep", ["lambda", "nodes", "depth", "components"])
def test_ablate_accepts_every_sweep_kind(sweep):
    args = parse_arguments(["ablate", "--sweep", sweep, "--seeds", "0,1"])
    assert args.sweep == sweep and args.seeds == "0,1"


def test_ablate_rejects_unknown_sweep():
    with pytest.raises(SystemExit):
        parse_arguments(["ablate", "--sweep", "width"])
