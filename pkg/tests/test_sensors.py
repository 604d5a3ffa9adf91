import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from suiteopt import (Landmark, Pose2, SensorConfigError, build_default_library, load_library,
                      measurement_sigmas, save_library, stereo_range_sigma, visible)
from suiteopt.sensors import ConstantNoise, MountedSensor, SensorModel, StereoNoise

# label -> (range, fov, sigma_range or (baseline, focal), sigma_bearing or None, cost)
GOLDEN = {
    "long-range lidar": (120, 2 * math.pi, 0.084, 0.00110, 100_000),
    "mid-range lidar": (100, 2 * math.pi, 0.03, 0.00524, 4_000),
    "mid-range radar": (160, 0.1, 0.04, 0.00175, 2_830),
    "long-range radar": (250, 0.0698, 0.013, 0.00175, 1_493),
    "wide-angle stereo": (50, math.pi / 2, (0.5371, 721.5377), None, 2_990),
    "HD2K stereo": (20, 1.33, (0.120, 1400), None, 449),
    "low-res stereo": (20, 1.52, (0.120, 350), None, 449),
}


class TestLibrary:
    def test_size_and_ids(self, library):
        assert len(library) == 62
        assert [e.id for e in library] == list(range(62))

    def test_golden_attributes(self, library):
        seen = {}
        for e in library:
            m = e.model
            rng, fov, noise, sb, cost = GOLDEN[m.label]
            assert (m.range_m, m.fov_rad, m.cost_usd) == (rng, fov, cost)
            if isinstance(noise, tuple):
                assert isinstance(m.noise, StereoNoise)
                assert (m.noise.baseline_m, m.noise.focal_px) == noise
                assert m.sigma_bearing_rad == 1.0 / noise[1]
            else:
                assert m.noise == ConstantNoise(noise) and m.sigma_bearing_rad == sb
            seen.setdefault(m.label, []).append(e.clock)
        assert seen["long-range lidar"] == [None] and seen["mid-range lidar"] == [None]
        for label in ("mid-range radar", "long-range radar", "wide-angle stereo",
                      "HD2K stereo", "low-res stereo"):
            assert seen[label] == list(range(12))

    def test_long_range_radar_entry(self, library):
        radar = [e for e in library if e.model.label == "long-range radar"]
        assert all(e.model.range_m == 250 and e.cost_usd == 1493 for e in radar)

    def test_one_of_each_cost(self, library):
        by_label = {}
        for e in library:
            by_label.setdefault(e.model.label, e.cost_usd)
        assert sum(by_label.values()) == 112_211

    def test_clock_boresight(self, library):
        assert library[2].boresight_rad == 0.0
        assert library[5].boresight_rad == pytest.approx(-math.pi / 2)
        assert library[5].placement == "3 o'clock"
        assert library[2].placement == "12 o'clock"

    def test_overrides(self):
        lib = build_default_library(overrides={"HD2K stereo": {"cost_usd": 399}})
        assert {e.cost_usd for e in lib if e.model.label == "HD2K stereo"} == {399}
        with pytest.raises(SensorConfigError):
            build_default_library(overrides={"HD2K stereo": {"cost_usd": -1}})
        with pytest.raises(SensorConfigError):
            build_default_library(overrides={"sonar": {"cost_usd": 5}})

    def test_disparity_sigma_option(self):
        lib = build_default_library(disparity_sigma_px=2.0)
        hd = next(e for e in lib if e.model.label == "HD2K stereo")
        assert hd.model.sigma_bearing_rad == 2.0 / 1400
        assert measurement_sigmas(hd, 20.0)[0] == pytest.approx(2 * 400 / 168)

    def test_mount_rules(self, library):
        radar = library[2].model
        with pytest.raises(SensorConfigError, match="roof"):
            MountedSensor(0, radar, None)
        with pytest.raises(SensorConfigError, match="roof-mounted only"):
            MountedSensor(0, library[0].model, 3)
        with pytest.raises(SensorConfigError):
            MountedSensor(0, radar, 12)

    @pytest.mark.parametrize("kwargs", [dict(range_m=0.0), dict(fov_rad=7.0), dict(cost_usd=0.0),
                                        dict(sigma_bearing_rad=-1.0), dict(kind="sonar")])
    def test_model_invariants(self, kwargs):
        base = dict(kind="radar", label="r", range_m=10.0, fov_rad=1.0, noise=ConstantNoise(0.1),
                    sigma_bearing_rad=0.01, cost_usd=10.0)
        with pytest.raises(SensorConfigError):
            SensorModel(**{**base, **kwargs})

    def test_file_round_trip(self, tmp_path, library):
        save_library(library, tmp_path / "lib.json")
        assert list(load_library(tmp_path / "lib.json")) == list(library)

    def test_subset_renumbers(self, library):
        sub = library.subset([5, 0, 40])
        assert [e.id for e in sub] == [0, 1, 2]
        assert [e.model for e in sub] == [library[5].model, library[0].model, library[40].model]
        with pytest.raises(SensorConfigError, match="unknown sensor id 99"):
            library.lookup([99])


class TestStereoSigma:
    def test_hd2k_example(self):
        assert abs(stereo_range_sigma(20, 1400, 0.120, 1.0) - 2.38095) < 1e-5
        assert stereo_range_sigma(20, 1400, 0.120, 1.0) == pytest.approx(400 / 168, rel=1e-15)

    def test_wide_angle_example(self):
        assert stereo_range_sigma(50, 721.5377, 0.5371, 1.0) == pytest.approx(6.450982, abs=1e-6)

    def test_zero_distance(self):
        assert stereo_range_sigma(0, 700, 0.5) == 0.0

    @pytest.mark.parametrize("args", [(-1, 1400, 0.12), (1, 0, 0.12), (1, 1400, 0), (1, 1400, 0.12, 0)])
    def test_rejects_bad_inputs(self, args):
        with pytest.raises(SensorConfigError):
            stereo_range_sigma(*args)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_quadratic_and_monotone(self, z, dz):
        a = stereo_range_sigma(z, 721.5377, 0.5371)
        assert stereo_range_sigma(2 * z, 721.5377, 0.5371) == pytest.approx(4 * a, rel=1e-12)
        assert stereo_range_sigma(z + dz, 721.5377, 0.5371) > a


def _cone_oracle(sensor, pose, lm):
    """Rotate the landmark into the sensor frame and read its angle off the +x axis."""
    a = -(pose.theta + sensor.boresight_rad)
    dx, dy = lm.x - pose.x, lm.y - pose.y
    u = math.cos(a) * dx - math.sin(a) * dy
    v = math.sin(a) * dx + math.cos(a) * dy
    if math.hypot(dx, dy) > sensor.model.range_m:
        return False
    return sensor.model.fov_rad >= 2 * math.pi - 1e-12 or abs(math.atan2(v, u)) <= sensor.model.fov_rad / 2


class TestVisible:
    def test_lidar_full_circle(self, library):
        pose = Pose2(0, 0, 0, 0.3)
        for ang in np.linspace(-math.pi, math.pi, 13):
            assert visible(library[0], pose, Landmark(0, 119 * math.cos(ang), 119 * math.sin(ang)))

    def test_narrow_radar_cone(self, library):
        radar = library[14]
        assert radar.model.label == "long-range radar" and radar.clock == 0
        pose = Pose2(0, 0, 0, 0)
        off = Landmark(0, 200 * math.cos(0.05), 200 * math.sin(0.05))
        assert not visible(radar, pose, off)
        inside = Landmark(1, 200 * math.cos(0.03), 200 * math.sin(0.03))
        assert visible(radar, pose, inside)

    def test_just_out_of_range(self, library):
        pose = Pose2(0, 0, 0, 0)
        for e in library:
            boresight = e.boresight_rad
            r = e.model.range_m
            assert not visible(e, pose, Landmark(0, (r + 1) * math.cos(boresight), (r + 1) * math.sin(boresight)))
            assert visible(e, pose, Landmark(0, (r - 1) * math.cos(boresight), (r - 1) * math.sin(boresight)))

    def test_three_oclock_faces_right(self, library):
        cam = library[38 + 3]
        assert visible(cam, Pose2(0, 0, 0, 0), Landmark(0, 0.0, -10.0))
        assert not visible(cam, Pose2(0, 0, 0, 0), Landmark(0, 0.0, 10.0))

    @settings(max_examples=300)
    @given(st.integers(0, 61), st.floats(-50, 50), st.floats(-50, 50), st.floats(-4, 4),
           st.floats(-300, 300), st.floats(-300, 300))
    def test_matches_rotation_oracle(self, sid, px, py, th, lx, ly):
        lib = build_default_library()
        pose, lm = Pose2(0, px, py, th), Landmark(0, lx, ly)
        # stay away from the cone boundary where the two formulas may round differently
        a = math.atan2(ly - py, lx - px) - pose.theta - lib[sid].boresight_rad
        off = abs(math.remainder(a, 2 * math.pi)) - lib[sid].model.fov_rad / 2
        d = math.hypot(lx - px, ly - py) - lib[sid].model.range_m
        if abs(off) < 1e-9 or abs(d) < 1e-9 or math.hypot(lx - px, ly - py) < 1e-6:
            return
        assert visible(lib[sid], pose, lm) == _cone_oracle(lib[sid], pose, lm)

    @settings(max_examples=300)
    @given(st.integers(0, 61), st.floats(-20, 20), st.floats(-20, 20), st.floats(-3, 3),
           st.floats(-100, 100), st.floats(-100, 100), st.floats(-math.pi, math.pi),
           st.floats(-500, 500), st.floats(-500, 500))
    def test_rigid_transform_invariance(self, sid, px, py, th, lx, ly, rot, tx, ty):
        lib = build_default_library()
        e = lib[sid]
        a = math.atan2(ly - py, lx - px) - th - e.boresight_rad
        off = abs(math.remainder(a, 2 * math.pi)) - e.model.fov_rad / 2
        d = math.hypot(lx - px, ly - py) - e.model.range_m
        if abs(off) < 1e-7 or abs(d) < 1e-7 or math.hypot(lx - px, ly - py) < 1e-6:
            return
        c, s = math.cos(rot), math.sin(rot)

        def move(x, y):
            return c * x - s * y + tx, s * x + c * y + ty

        p2 = Pose2(0, *move(px, py), th + rot)
        l2 = Landmark(0, *move(lx, ly))
        assert visible(e, Pose2(0, px, py, th), Landmark(0, lx, ly)) == visible(e, p2, l2)


class TestMeasurementSigmas:
    def test_lidar(self, library):
        assert measurement_sigmas(library[0], 50.0) == (0.084, 0.00110)

    def test_hd2k(self, library):
        sr, sb = measurement_sigmas(library[38], 20.0)
        assert sr == pytest.approx(2.38095, abs=1e-5)
        assert sb == pytest.approx(7.143e-4, abs=1e-7)

    def test_mid_range_radar(self, library):
        assert measurement_sigmas(library[2], 100.0) == (0.04, 0.00175)

    def test_rejects_zero_distance(self, library):
        with pytest.raises(SensorConfigError):
            measurement_sigmas(library[38], 0.0)

    def test_vectorized(self, library):
        z = np.array([1.0, 10.0, 20.0])
        sr, sb = measurement_sigmas(library[50], z)
        assert np.allclose(sr, z ** 2 / (350 * 0.120)) and np.all(sb == 1 / 350)

    @given(st.integers(0, 61), st.floats(0, 1))
    def test_positive_over_range(self, sid, frac):
        e = build_default_library()[sid]
        z = max(frac * e.model.range_m, 1e-6)
        sr, sb = measurement_sigmas(e, z)
        assert sr > 0 and sb > 0
