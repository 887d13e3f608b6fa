import numpy as np
import pytest

from reflectfield import geometry
from reflectfield.geometry import (Camera, PointLight, Ray, encode_points,
                                   generate_camera_ray, look_at,
                                   positional_encode, project, vec3)


class TestPositionalEncode:
    def test_zero_alternates(self):
        np.testing.assert_array_equal(positional_encode(0.0, 2), [0, 1, 0, 1])

    def test_one_at_single_frequency(self):
        enc = positional_encode(1.0, 1)
        np.testing.assert_allclose(enc, [0.0, -1.0], atol=1e-12)

    def test_matches_direct_evaluation(self):
        # oracle: direct per-entry scalar sin/cos
        v, w = 0.3, 10
        enc = positional_encode(v, w)
        for k in range(w):
            assert enc[2 * k] == pytest.approx(np.sin(2 ** k * np.pi * v), abs=1e-15)
            assert enc[2 * k + 1] == pytest.approx(np.cos(2 ** k * np.pi * v), abs=1e-15)

    def test_components_bounded(self):
        rng = np.random.default_rng(0)
        enc = positional_encode(rng.uniform(-1, 1, 500), 10)
        assert np.all(np.abs(enc) <= 1.0)

    def test_periodicity_per_level(self):
        rng = np.random.default_rng(1)
        v = rng.uniform(-1, 1, 100)
        for k in range(4):
            a = positional_encode(v, 5)[:, 2 * k:2 * k + 2]
            b = positional_encode(v + 2.0 / 2 ** k, 5)[:, 2 * k:2 * k + 2]
            np.testing.assert_allclose(a, b, atol=1e-9)

    def test_rejects_no_frequencies(self):
        with pytest.raises(ValueError):
            positional_encode(0.5, 0)


class TestEncodePoints:
    def test_origin(self):
        enc = encode_points(np.zeros(3), 10)
        assert enc.shape == (60,)
        np.testing.assert_array_equal(enc[0::2], 0.0)
        np.testing.assert_array_equal(enc[1::2], 1.0)

    def test_unit_x_single_frequency(self):
        np.testing.assert_allclose(encode_points(vec3(1, 0, 0), 1),
                                   [0, -1, 0, 1, 0, 1], atol=1e-12)

    def test_is_concatenation_of_per_coordinate_encodings(self):
        rng = np.random.default_rng(2)
        p = rng.uniform(-1, 1, 3)
        enc = encode_points(p, 6)
        expect = np.concatenate([positional_encode(c, 6) for c in p])
        np.testing.assert_array_equal(enc, expect)

    def test_deterministic(self):
        p = vec3(0.1, -0.4, 0.9)
        np.testing.assert_array_equal(encode_points(p, 8), encode_points(p, 8))


class TestCameraRays:
    def _camera(self, w=5, h=5):
        pos = vec3(0, 0, -3)
        return Camera(pos, look_at(pos, np.zeros(3)), focal=6.0, width=w, height=h)

    def test_principal_pixel_is_forward(self):
        cam = self._camera()
        ray = generate_camera_ray(cam, (2, 2), jitter=(0.5, 0.5))
        np.testing.assert_allclose(ray.direction, cam.forward, atol=1e-12)

    def test_corner_symmetry(self):
        cam = self._camera()
        r00 = generate_camera_ray(cam, (0, 0))
        r44 = generate_camera_ray(cam, (4, 4))
        f00 = r00.direction @ cam.forward
        f44 = r44.direction @ cam.forward
        assert f00 == pytest.approx(f44, abs=1e-12)

    def test_reprojection_round_trip(self):
        cam = self._camera(9, 7)
        rng = np.random.default_rng(3)
        for _ in range(20):
            i = rng.integers(0, 9)
            j = rng.integers(0, 7)
            u, v = rng.random(2)
            ray = generate_camera_ray(cam, (i, j), jitter=(u, v))
            point = ray.at(rng.uniform(0.5, 5.0))
            px, py = project(cam, point)
            assert px == pytest.approx(i + u, abs=1e-6)
            assert py == pytest.approx(j + v, abs=1e-6)

    def test_rejects_out_of_range_pixel(self):
        cam = self._camera()
        with pytest.raises(ValueError):
            generate_camera_ray(cam, (5, 0))

    def test_bbox_bounds(self):
        cam = self._camera()
        bbox = (np.array([-1.0, -1, -1]), np.array([1.0, 1, 1]))
        ray = generate_camera_ray(cam, (2, 2), bbox=bbox)
        assert ray.t_near == pytest.approx(2.0, abs=1e-9)
        assert ray.t_far == pytest.approx(4.0, abs=1e-9)


class TestDomainTypes:
    def test_ray_requires_unit_direction(self):
        with pytest.raises(ValueError):
            Ray(vec3(0, 0, 0), vec3(0, 0, 2), 0.0, 1.0)

    def test_ray_requires_ordered_bounds(self):
        with pytest.raises(ValueError):
            Ray(vec3(0, 0, 0), vec3(0, 0, 1), 2.0, 1.0)

    def test_light_rejects_negative_intensity(self):
        with pytest.raises(ValueError):
            PointLight(vec3(0, 0, 0), np.array([-1.0, 0, 0]))

    def test_camera_invariants(self):
        with pytest.raises(ValueError):
            Camera(vec3(0, 0, 0), np.eye(3), focal=-1.0, width=4, height=4)
        with pytest.raises(ValueError):
            Camera(vec3(0, 0, 0), np.eye(3), focal=1.0, width=0, height=4)


def test_ray_bbox_range_miss_collapses():
    o = np.array([[0.0, 0.0, -3.0]])
    d = np.array([[0.0, 1.0, 0.0]])
    bbox = (np.array([-1.0, -1, -1]), np.array([1.0, 1, 1]))
    tn, tf = geometry.ray_bbox_range(o, d, bbox)
    assert tf[0] <= tn[0]
