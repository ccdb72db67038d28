"""YAML config parsing and validation."""

import pytest

from mirsim.config import (
    BringupConfig,
    default_config,
    load_config,
    parse_config,
)
from mirsim.errors import ConfigError


class TestDefaults:
    def test_empty_text_gives_defaults(self):
        cfg = parse_config("")
        ref = default_config()
        assert cfg == ref
        assert cfg.bridge_port == 9090
        assert cfg.plant.v_max == 1.12
        assert cfg.teleop.deadzone == 0.05
        assert cfg.daq is None
        assert cfg.realtime is False

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(str(path)) == default_config()

    def test_comment_only_file(self):
        assert parse_config("# nothing here\n") == default_config()


class TestOverrides:
    def test_plant_override(self):
        cfg = parse_config("plant:\n  v_max: 0.5\n")
        assert cfg.plant.v_max == 0.5
        assert cfg.plant.wheel_radius == 0.1  # untouched default

    def test_teleop_override(self):
        cfg = parse_config("teleop:\n  deadzone: 0.1\n  invert_steering: true\n")
        assert cfg.teleop.deadzone == 0.1
        assert cfg.teleop.invert_steering is True

    def test_scalar_overrides(self):
        cfg = parse_config("bridge_port: 8100\nseed: 1234\nrealtime: true\n")
        assert cfg.bridge_port == 8100
        assert cfg.seed == 1234
        assert cfg.realtime is True

    def test_daq_section(self, tmp_path):
        cfg = parse_config(
            "daq:\n"
            "  topics: [/encoder_pulse, /scan]\n"
            f"  output_dir: {tmp_path}\n"
            "  session_name: run1\n"
        )
        assert cfg.daq is not None
        assert cfg.daq.topics == ("/encoder_pulse", "/scan")
        assert cfg.daq.session_name == "run1"

    def test_world_file_resolves(self, tmp_path):
        world = tmp_path / "walls.txt"
        world.write_text("0 0 1 0\n")
        cfg = parse_config(f"world_file: {world}\n")
        assert cfg.world_file == str(world)

    def test_lidar_preset(self):
        assert parse_config("lidar: ydlidar\n").lidar == "ydlidar"

    def test_static_dir_resolves(self, tmp_path):
        cfg = parse_config(f"static_dir: {tmp_path}\n")
        assert cfg.static_dir == str(tmp_path)

    def test_rates(self):
        cfg = parse_config("imu_rate_hz: 100\ncamera_rate_hz: 15\n")
        assert cfg.imu_rate_hz == 100
        assert cfg.camera_rate_hz == 15


class TestRejection:
    def test_unknown_top_level_key_named(self):
        with pytest.raises(ConfigError, match="bridge_prot"):
            parse_config("bridge_prot: 9090\n")

    def test_unknown_plant_key_named(self):
        with pytest.raises(ConfigError, match=r"plant\.'?v_maxx'?"):
            parse_config("plant:\n  v_maxx: 0.5\n")

    def test_unknown_teleop_key_named(self):
        with pytest.raises(ConfigError, match="deadzone_pct"):
            parse_config("teleop:\n  deadzone_pct: 5\n")

    def test_parse_error_carries_line_number(self):
        bad = "plant:\n  v_max: 0.5\n   bad_indent: [\n"
        with pytest.raises(ConfigError, match=r"cfg\.yaml:[34]"):
            parse_config(bad, source="cfg.yaml")

    def test_non_mapping_document(self):
        with pytest.raises(ConfigError, match="mapping"):
            parse_config("- just\n- a\n- list\n")

    def test_non_mapping_section(self):
        with pytest.raises(ConfigError, match="plant"):
            parse_config("plant: 5\n")

    def test_invalid_plant_value_surfaces(self):
        with pytest.raises(ConfigError, match="plant"):
            parse_config("plant:\n  v_max: -1.0\n")

    def test_missing_world_file_named(self):
        with pytest.raises(ConfigError, match="no/such/world.txt"):
            parse_config("world_file: no/such/world.txt\n")

    def test_missing_joy_script_named(self):
        with pytest.raises(ConfigError, match="ghost.jsonl"):
            parse_config("joy_script: ghost.jsonl\n")

    def test_missing_static_dir_named(self):
        with pytest.raises(ConfigError, match="no/such/site"):
            parse_config("static_dir: no/such/site\n")

    def test_bad_port(self):
        with pytest.raises(ConfigError, match="bridge_port"):
            parse_config("bridge_port: 70000\n")

    def test_bad_lidar_preset_lists_known(self):
        with pytest.raises(ConfigError, match="neato"):
            parse_config("lidar: sick\n")

    def test_negative_seed(self):
        with pytest.raises(ConfigError, match="seed"):
            BringupConfig(
                plant=default_config().plant,
                teleop=default_config().teleop,
                seed=-1,
            )

    def test_zero_rate(self):
        with pytest.raises(ConfigError, match="imu_rate_hz"):
            parse_config("imu_rate_hz: 0\n")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError, match="read"):
            load_config(str(tmp_path / "missing.yaml"))

    def test_empty_daq_topics(self, tmp_path):
        with pytest.raises(ConfigError, match="empty"):
            parse_config(f"daq:\n  topics: []\n  output_dir: {tmp_path}\n")
