import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwsim import config as CFG
from mmwsim.config import ConfigError, RunConfig, TargetSpec, default_run_config


def config_with_target(seed=1, **kw):
    base = dict(id="t0", vehicle_class="car", lane=1, distance=40.0, speed=10.0)
    base.update(kw)
    return dataclasses.replace(default_run_config(seed=seed),
                               targets=(TargetSpec(**base),))


class TestDefaults:
    def test_default_config(self):
        cfg = default_run_config(seed=7)
        assert cfg.seed == 7
        assert cfg.chirp.f0 == 77.0e9
        assert cfg.chirp.samples_per_chirp == 256
        assert cfg.frame.chirps_per_frame == 128
        assert cfg.array.rx_count == 4
        assert cfg.radar_height == 6.0
        assert cfg.downtilt_deg == 5.0
        assert list(cfg.lanes.lane_center_x) == [2.0, 5.75, 9.5]

    def test_effective_link_noise_toggle(self):
        cfg = default_run_config(seed=1)
        assert cfg.effective_link().snr_db == cfg.link.snr_db
        quiet = dataclasses.replace(cfg, noise=False)
        assert math.isinf(quiet.effective_link().snr_db)


class TestTomlRoundTrip:
    def test_default_round_trips(self):
        cfg = config_with_target()
        assert CFG.loads(cfg.to_toml()) == cfg

    def test_modified_round_trips(self):
        cfg = config_with_target(seed=99, vehicle_class="bus", lane=3,
                                 distance=55.0, speed=3.25, lane_offset_x=-0.5)
        cfg = dataclasses.replace(
            cfg,
            chirp=dataclasses.replace(cfg.chirp, samples_per_chirp=512),
            noise=False)
        back = CFG.loads(cfg.to_toml())
        assert back == cfg
        assert back.chirp.bandwidth == 1.25e9

    def test_load_from_file(self, tmp_path):
        cfg = config_with_target(seed=3)
        p = tmp_path / "run.toml"
        p.write_text(cfg.to_toml())
        assert CFG.load(p) == cfg

    @given(seed=st.integers(min_value=0, max_value=2 ** 31 - 1),
           lane=st.integers(min_value=1, max_value=3),
           distance=st.floats(min_value=25.0, max_value=60.0),
           speed=st.floats(min_value=0.0, max_value=15.0))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_property(self, seed, lane, distance, speed):
        cfg = config_with_target(seed=seed, lane=lane,
                                 distance=round(distance, 6),
                                 speed=round(speed, 6))
        assert CFG.loads(cfg.to_toml()) == cfg


class TestValidation:
    def test_seed_mandatory(self):
        with pytest.raises(ConfigError, match="seed"):
            CFG.from_dict({})

    def test_unknown_keys_rejected(self):
        cfg = default_run_config(seed=1)
        data = cfg.to_dict()
        data["chirp"]["bananas"] = 1
        with pytest.raises(ConfigError, match="unknown"):
            CFG.from_dict(data)

    def test_bad_toml_rejected(self):
        with pytest.raises(ConfigError, match="TOML"):
            CFG.loads("seed = [unclosed")

    def test_lane_out_of_range(self):
        cfg = config_with_target(lane=4)
        with pytest.raises(ConfigError, match="lane"):
            cfg.scene()

    def test_distance_too_short(self):
        # slant distance must exceed the radar-to-lane offset
        cfg = config_with_target(distance=5.0)
        with pytest.raises(ConfigError, match="too short"):
            cfg.scene()

    def test_unknown_vehicle_class(self):
        cfg = config_with_target(vehicle_class="hovercraft")
        with pytest.raises(Exception):
            cfg.scene()


class TestSceneGeometry:
    def test_nose_truth_hand_check(self):
        cfg = config_with_target(distance=40.0, speed=10.0, lane=1)
        t = cfg.targets[0]
        truth = cfg.nose_truth(t)
        x = 2.0
        dz = 6.0 - 1.8 / 2.0          # radar height minus half car height
        y = math.sqrt(40.0 ** 2 - x ** 2 - dz ** 2)
        assert truth["x"] == pytest.approx(x)
        assert truth["y"] == pytest.approx(y)
        assert truth["range_m"] == 40.0
        assert truth["radial_velocity"] == pytest.approx(10.0 * y / 40.0)
        assert truth["azimuth_deg"] == pytest.approx(math.degrees(math.atan2(x, y)))
        # center sits half a car length behind the nose
        assert truth["center_y"] == pytest.approx(y + 2.5)

    def test_scene_track_positions(self):
        cfg = config_with_target(distance=40.0, lane=2)
        scene = cfg.scene()
        assert len(scene.targets) == 1
        tr = scene.targets[0]
        assert tr.lane_index == 1
        x = 5.75
        dz = 6.0 - 0.9
        y = math.sqrt(40.0 ** 2 - x ** 2 - dz ** 2)
        assert tr.initial_range_y == pytest.approx(y + 2.5)

    def test_slant_distance_recovered(self):
        # the configured distance is the slant range to the nose point
        cfg = config_with_target(distance=47.0, lane=3)
        truth = cfg.nose_truth(cfg.targets[0])
        dz = 6.0 - 0.9
        slant = math.sqrt(truth["x"] ** 2 + truth["y"] ** 2 + dz ** 2)
        assert slant == pytest.approx(47.0)


class TestHashing:
    def test_hash_stable(self):
        a = config_with_target(seed=5)
        b = config_with_target(seed=5)
        assert a.sha256() == b.sha256()
        assert len(a.sha256()) == 16

    def test_hash_tracks_content(self):
        a = config_with_target(seed=5)
        b = config_with_target(seed=6)
        c = dataclasses.replace(a, noise=False)
        assert a.sha256() != b.sha256()
        assert a.sha256() != c.sha256()
