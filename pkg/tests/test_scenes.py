import os

import numpy as np
import pytest

from reflectfield.geometry import Camera, PointLight, look_at, vec3
from reflectfield.scenes import (AnalyticScene, SphereBlob, generate_dataset,
                                 load_dataset, make_scene, render_ground_truth,
                                 ring_poses, sphere_poses, without_occluder)


class TestDensity:
    def test_center_value(self):
        scene = make_scene("homog-sphere")
        assert scene.density(np.zeros((1, 3)))[0] == pytest.approx(5.0)

    def test_outside_is_zero(self):
        scene = make_scene("homog-sphere")
        assert scene.density(np.array([[0.0, 0.8, 0.0]]))[0] == 0.0

    def test_surface_is_half(self):
        # the falloff band is centered on the surface
        scene = make_scene("homog-sphere")
        assert scene.density(np.array([[0.5, 0.0, 0.0]]))[0] == \
            pytest.approx(2.5, rel=1e-12)

    def test_chord_optical_depth_is_exact(self):
        # [DERIVED] symmetric smoothstep band: depth along a diameter is
        # exactly sigma0 * 2r regardless of the band width
        scene = make_scene("homog-sphere", band=0.08)
        n = 200_000
        span = 1.4
        h = span / n
        x = -0.7 + (np.arange(n) + 0.5) * h
        pts = np.stack([x, np.zeros(n), np.zeros(n)], axis=1)
        depth = scene.density(pts).sum() * h
        assert depth == pytest.approx(5.0 * 1.0, rel=1e-6)

    def test_multiple_blobs_take_max(self):
        scene = make_scene("two-blob-occluder")
        # inside the occluder only
        assert scene.density(np.array([[0.0, 0.0, 0.75]]))[0] == \
            pytest.approx(40.0)


class TestNormalsAndAlbedo:
    def test_normal_is_radial(self):
        scene = make_scene("homog-sphere")
        p = np.array([[0.3, 0.2, -0.1]])
        n = scene.normal(p)[0]
        np.testing.assert_allclose(n, p[0] / np.linalg.norm(p[0]), atol=1e-12)

    def test_normal_at_center_fallback(self):
        scene = make_scene("homog-sphere")
        np.testing.assert_array_equal(scene.normal(np.zeros((1, 3)))[0],
                                      [0.0, 0.0, 1.0])

    def test_occluder_normal_points_from_its_own_center(self):
        scene = make_scene("two-blob-occluder")
        p = np.array([[0.0, 0.1, 0.75]])
        np.testing.assert_allclose(scene.normal(p)[0], [0.0, 1.0, 0.0],
                                   atol=1e-12)

    def test_checker_parity(self):
        scene = make_scene("checker-sphere")
        a = scene.albedo(np.array([[0.1, 0.1, 0.1]]))[0]   # cells (0,0,0): even
        b = scene.albedo(np.array([[0.3, 0.1, 0.1]]))[0]   # cells (1,0,0): odd
        np.testing.assert_array_equal(a, (0.8, 0.75, 0.7))
        np.testing.assert_array_equal(b, (0.15, 0.2, 0.45))

    def test_const_albedo_ignores_position(self):
        scene = make_scene("homog-sphere")
        rng = np.random.default_rng(0)
        a = scene.albedo(rng.uniform(-1, 1, (50, 3)))
        assert np.all(a == a[0])


class TestPresets:
    def test_unknown_preset_raises(self):
        with pytest.raises(ValueError):
            make_scene("no-such-scene")

    def test_without_occluder_drops_second_blob(self):
        scene = make_scene("two-blob-occluder")
        clear = without_occluder(scene)
        assert len(clear.blobs) == 1
        assert clear.blobs[0].radius == scene.blobs[0].radius

    def test_overrides_apply(self):
        scene = make_scene("homog-sphere", band=0.1)
        assert scene.band == 0.1


class TestPoses:
    def test_ring_on_circle(self):
        p = ring_poses(12, 2.5)
        np.testing.assert_allclose(np.linalg.norm(p, axis=1), 2.5, atol=1e-12)
        assert np.allclose(p[:, 1], p[0, 1])  # constant elevation

    def test_ring_evenly_spaced(self):
        p = ring_poses(8, 2.0)
        gaps = np.linalg.norm(np.diff(np.vstack([p, p[:1]]), axis=0), axis=1)
        np.testing.assert_allclose(gaps, gaps[0], rtol=1e-9)

    def test_sphere_radius_and_spread(self):
        p = sphere_poses(64, 3.0)
        np.testing.assert_allclose(np.linalg.norm(p, axis=1), 3.0, atol=1e-9)
        # both hemispheres covered
        assert np.sum(p[:, 1] > 0) > 20 and np.sum(p[:, 1] < 0) > 20


def small_camera(resolution=24, pos=(0.0, 0.0, -2.5)):
    pos = np.asarray(pos, dtype=np.float64)
    return Camera(pos, look_at(pos, np.zeros(3)), 1.1 * resolution,
                  resolution, resolution)


class TestGroundTruthRenderer:
    def test_empty_scene_renders_background(self):
        scene = AnalyticScene([SphereBlob(np.zeros(3), 0.2, 0.0)])
        cam = small_camera(8)
        light = PointLight(cam.position, np.ones(3))
        img = render_ground_truth(scene, cam, light, 2e-2,
                                  background=(0.25, 0.5, 0.75))
        np.testing.assert_allclose(img, np.broadcast_to((0.25, 0.5, 0.75),
                                                        img.shape), atol=1e-12)

    def test_step_halving_converges(self):
        # Richardson-style self check: halving the step shrinks the change
        scene = make_scene("homog-sphere", band=0.1)
        cam = small_camera(12)
        light = PointLight(cam.position, np.full(3, 5.0))
        imgs = [render_ground_truth(scene, cam, light, s)
                for s in (4e-2, 2e-2, 1e-2, 5e-3)]
        diffs = [np.abs(b - a).mean() for a, b in zip(imgs, imgs[1:])]
        # first-order quadrature: each halving shrinks the change by ~2x
        assert diffs[1] < 0.75 * diffs[0]
        assert diffs[2] < 0.75 * diffs[1]
        assert diffs[2] < 0.45 * diffs[0]

    def test_collocated_shadowless_vs_offset_light_shadow(self):
        # the occluder sits between the light and the main blob only when the
        # light is non-collocated: a collocated render shows no shadow
        scene = make_scene("two-blob-occluder")
        pos = np.array([0.0, 2.5, 0.0])
        cam = Camera(pos, look_at(pos, np.zeros(3)), 1.1 * 24, 24, 24)
        coll = PointLight(pos, np.full(3, 8.0))
        offset = PointLight(np.array([0.0, 0.0, 2.5]), np.full(3, 8.0))
        img_coll = render_ground_truth(scene, cam, coll, 1e-2)
        img_off = render_ground_truth(scene, cam, offset, 1e-2)
        # center pixels look down on the main blob's pole, shadowed when the
        # light comes from +z behind the occluder
        c = img_coll[11:13, 11:13].mean()
        o = img_off[11:13, 11:13].mean()
        assert o < 0.2 * c

    def test_brighter_light_scales_linearly(self):
        scene = make_scene("homog-sphere")
        cam = small_camera(8)
        l1 = PointLight(cam.position, np.full(3, 2.0))
        l3 = PointLight(cam.position, np.full(3, 6.0))
        a = render_ground_truth(scene, cam, l1, 2e-2)
        b = render_ground_truth(scene, cam, l3, 2e-2)
        np.testing.assert_allclose(b, 3.0 * a, rtol=1e-10, atol=1e-14)


class TestDatasetIO:
    def test_round_trip(self, tmp_path):
        scene = make_scene("homog-sphere", band=0.1)
        out = str(tmp_path / "ds")
        ds = generate_dataset(scene, 3, 8, "ring", (4.0, 4.0, 4.0), out,
                              step=2e-2, n_freqs=6, write_png=False)
        back = load_dataset(out)
        assert back.n_freqs == 6
        assert len(back.images) == 3
        np.testing.assert_array_equal(back.bbox[0], ds.bbox[0])
        for a, b in zip(ds.images, back.images):
            # images persist as 32-bit pfm
            np.testing.assert_array_equal(a.astype(np.float32),
                                          b.astype(np.float32))
        for ca, cb in zip(ds.cameras, back.cameras):
            np.testing.assert_array_equal(ca.position, cb.position)
            np.testing.assert_array_equal(ca.rotation, cb.rotation)
            assert ca.focal == cb.focal

    def test_collocated_invariant(self, tmp_path):
        scene = make_scene("homog-sphere", band=0.1)
        ds = generate_dataset(scene, 3, 8, "sphere", (4.0, 4.0, 4.0),
                              str(tmp_path / "ds"), step=2e-2, write_png=False)
        for cam, light in zip(ds.cameras, ds.lights):
            np.testing.assert_array_equal(cam.position, light.position)

    def test_manifest_layout(self, tmp_path):
        scene = make_scene("homog-sphere", band=0.1)
        generate_dataset(scene, 2, 8, "ring", (4.0, 4.0, 4.0),
                         str(tmp_path / "ds"), step=2e-2, write_png=False)
        lines = (tmp_path / "ds" / "manifest.txt").read_text().splitlines()
        assert lines[0] == "resolution 8 8"
        assert lines[1] == "W 10"
        assert lines[2].startswith("bbox ")
        assert len(lines) == 5
        assert len(lines[3].split()) == 1 + 3 + 9 + 1 + 3

    def test_missing_manifest_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(str(tmp_path))

    def test_rejects_bad_layout(self, tmp_path):
        scene = make_scene("homog-sphere")
        with pytest.raises(ValueError):
            generate_dataset(scene, 2, 8, "grid", (1.0, 1.0, 1.0),
                             str(tmp_path / "ds"))
