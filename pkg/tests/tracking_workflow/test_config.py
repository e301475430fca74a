import pytest

from app.core.exception import ConfigError
from app.domain.enums import AttentionCue
from app.tracking_workflow.config import (
    RunConfig,
    build_run_config,
    dump_run_config,
    load_run_config,
    parse_run_config_text,
)


def test_defaults_follow_reference_scale():
    config = RunConfig()
    assert config.feature_dim == 512
    assert config.fc1_dim == 2048
    assert config.triplet_lambda == 0.1
    assert config.gcn_enabled and config.samples_per_graph == 32
    assert config.online_fc_lr == pytest.approx(1e-4 / 3)
    assert config.online_head_lr == pytest.approx(1e-3 / 3)


def test_parse_handles_comments_tuples_and_none():
    values = parse_run_config_text(
        """
        # comment line
        triplet_lambda = 0.3   # trailing comment
        conv_channels = 8, 16, 16
        gpgnet_checkpoint = none
        """
    )
    assert values == {"triplet_lambda": "0.3", "conv_channels": ("8", "16", "16"), "gpgnet_checkpoint": None}
    config = build_run_config(values)
    assert config.triplet_lambda == 0.3
    assert config.conv_channels == (8, 16, 16)


def test_malformed_line_is_rejected():
    with pytest.raises(ConfigError):
        parse_run_config_text("triplet_lambda 0.3")


def test_unknown_keys_and_invalid_values_are_rejected():
    with pytest.raises(ConfigError, match="unknown keys"):
        build_run_config({"tripplet_lambda": 0.2})
    with pytest.raises(ConfigError):
        build_run_config({"triplet_lambda": -0.1})
    with pytest.raises(ConfigError):
        build_run_config({"node_count": 1})
    with pytest.raises(ConfigError):
        build_run_config({"frame_height": 50})


def test_overrides_win_and_none_is_ignored():
    config = build_run_config({"seed": 1, "triplet_lambda": 0.2}, {"seed": 7, "triplet_lambda": None})
    assert config.seed == 7 and config.triplet_lambda == 0.2


def test_node_count_zero_disables_graph():
    config = build_run_config({"node_count": 0})
    assert not config.gcn_enabled
    assert config.samples_per_graph == 32


def test_dump_and_reload_preserves_values(tmp_path, tiny_config):
    config = tiny_config.model_copy(update={"attention_cue": AttentionCue.LANGUAGE_ONLY, "gpgnet_checkpoint": None})
    path = tmp_path / "run.cfg"
    path.write_text(dump_run_config(config), encoding="utf-8")
    assert load_run_config(path) == config


@pytest.mark.parametrize("name", ["default.cfg", "desk.cfg"])
def test_shipped_configs_load(config_dir, name):
    config = load_run_config(config_dir / name)
    assert config.frame_height % 16 == 0


def test_enum_parse_is_lenient_about_case_and_whitespace():
    assert AttentionCue.parse(" Joint\n") == AttentionCue.JOINT
    assert AttentionCue.JOINT.value in AttentionCue.to_list()
    with pytest.raises(ConfigError):
        AttentionCue.parse("sideways")
