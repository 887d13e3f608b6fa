import numpy as np
import pytest

from reflectfield.geometry import PointLight, vec3
from reflectfield.lightcache import (TransmittanceVolume,
                                     build_transmittance_volume, load_cache,
                                     query_transmittance, save_cache)
from reflectfield.mlp import FieldOutput
from reflectfield.raymarch import brute_force_light_transmittance
from reflectfield.scenes import make_scene

BBOX = (np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0]))


def empty_field(points):
    n = len(points)
    return FieldOutput(np.zeros(n), np.tile([0.0, 0, 1], (n, 1)),
                       np.full((n, 3), 0.5), np.full(n, 0.5))


def build(scene, light, resolution=32, seed=0):
    return build_transmittance_volume(scene.field, scene.field, light,
                                      scene.bbox, resolution=resolution,
                                      n_coarse=32, n_fine=64,
                                      rng=np.random.default_rng(seed))


class TestBuild:
    def test_light_inside_bbox_rejected(self):
        light = PointLight(vec3(0.0, 0.0, 0.0), np.ones(3))
        with pytest.raises(ValueError, match="inside"):
            build_transmittance_volume(empty_field, empty_field, light, BBOX)

    def test_empty_field_is_fully_transparent(self):
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build_transmittance_volume(empty_field, empty_field, light, BBOX,
                                         resolution=16, n_coarse=8, n_fine=8,
                                         rng=np.random.default_rng(0))
        np.testing.assert_allclose(vol.taus, 1.0, atol=1e-12)

    def test_taus_non_increasing_and_start_near_one(self):
        scene = make_scene("two-blob-occluder")
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build(scene, light, resolution=16)
        assert np.all(np.diff(vol.taus, axis=-1) <= 1e-12)
        assert np.all(vol.taus[..., 0] > 0.999)
        assert np.all(np.diff(vol.ts, axis=-1) >= 0.0)

    def test_deterministic_given_seed(self):
        scene = make_scene("homog-sphere")
        light = PointLight(vec3(2.0, 1.0, 2.0), np.ones(3))
        a = build(scene, light, resolution=16, seed=3)
        b = build(scene, light, resolution=16, seed=3)
        np.testing.assert_array_equal(a.taus, b.taus)
        np.testing.assert_array_equal(a.ts, b.ts)

    def test_rejects_tiny_resolution(self):
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        with pytest.raises(ValueError):
            build_transmittance_volume(empty_field, empty_field, light, BBOX,
                                       resolution=4)


class TestQuery:
    def test_point_outside_frustum_is_unoccluded(self):
        scene = make_scene("homog-sphere")
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build(scene, light)
        # behind the light: opposite side of the frustum
        tau = query_transmittance(vol, np.array([[0.0, 0.0, 5.0]]))
        assert tau[0] == 1.0

    def test_point_before_volume_is_unoccluded(self):
        scene = make_scene("homog-sphere")
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build(scene, light)
        tau = query_transmittance(vol, np.array([[0.0, 0.0, 2.2]]))
        assert tau[0] > 0.999

    def test_point_behind_volume_sees_exit_transmittance(self):
        scene = make_scene("homog-sphere")
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build(scene, light, resolution=64)
        got = query_transmittance(vol, np.array([[0.0, 0.0, -1.5]]))[0]
        ref = brute_force_light_transmittance(np.array([[0.0, 0.0, -1.5]]),
                                              light, scene.density, 1e-3)[0]
        assert got == pytest.approx(ref, abs=0.02)

    def test_matches_brute_force_inside_volume(self):
        scene = make_scene("two-blob-occluder")
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build(scene, light, resolution=64)
        rng = np.random.default_rng(7)
        pts = rng.uniform(scene.bbox[0], scene.bbox[1], (300, 3))
        got = query_transmittance(vol, pts)
        ref = brute_force_light_transmittance(pts, light, scene.density, 1e-3)
        err = np.abs(got - ref)
        assert err.mean() < 0.02, err.mean()
        assert err.max() < 0.2, err.max()

    def test_shadow_behind_occluder(self):
        scene = make_scene("two-blob-occluder")
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build(scene, light, resolution=64)
        # directly behind the small occluder on the light axis
        shadowed = query_transmittance(vol, np.array([[0.0, 0.0, 0.52]]))[0]
        lit = query_transmittance(vol, np.array([[0.5, 0.5, 0.52]]))[0]
        assert shadowed < 1e-3
        assert lit > 0.98

    def test_single_point_convenience(self):
        scene = make_scene("homog-sphere")
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build(scene, light)
        tau = query_transmittance(vol, np.array([0.0, 0.0, 5.0]))
        assert tau.shape == (1,)


class TestCacheIO:
    def test_round_trip_bit_exact(self, tmp_path):
        scene = make_scene("homog-sphere")
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build(scene, light, resolution=16)
        path = tmp_path / "cache.bin"
        save_cache(path, vol)
        back = load_cache(path)
        np.testing.assert_array_equal(vol.ts, back.ts)
        np.testing.assert_array_equal(vol.taus, back.taus)
        np.testing.assert_array_equal(vol.light_position, back.light_position)
        np.testing.assert_array_equal(vol.rotation, back.rotation)
        assert vol.focal == back.focal
        assert vol.resolution == tuple(back.resolution)

    def test_loaded_cache_queries_identically(self, tmp_path):
        scene = make_scene("two-blob-occluder")
        light = PointLight(vec3(0.0, 0.0, 3.0), np.ones(3))
        vol = build(scene, light, resolution=16)
        path = tmp_path / "cache.bin"
        save_cache(path, vol)
        back = load_cache(path)
        rng = np.random.default_rng(9)
        pts = rng.uniform(-1, 1, (100, 3))
        np.testing.assert_array_equal(query_transmittance(vol, pts),
                                      query_transmittance(back, pts))

    def test_rejects_wrong_magic(self, tmp_path):
        p = tmp_path / "bad.bin"
        p.write_bytes(b"NRFCKPT1" + b"\0" * 64)
        with pytest.raises(ValueError):
            load_cache(p)
