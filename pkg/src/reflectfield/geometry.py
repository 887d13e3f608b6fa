"""Cameras, rays, point lights and the frequency encoding of 3D positions.

Points and directions are plain numpy arrays of shape (..., 3), float64.
Scene coordinates are assumed to be pre-normalized so the object bounding
box fits inside [-1, 1]^3 before encoding; the highest encoding frequency
(2^(W-1) * pi) is only meaningful on that domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def vec3(x, y, z):
    return np.array([x, y, z], dtype=np.float64)


def normalize(v, eps=0.0):
    """Normalize along the last axis. With eps > 0, degenerate vectors map to +z."""
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if eps > 0.0:
        bad = n < eps
        safe = np.where(bad, 1.0, n)
        out = v / safe
        return np.where(bad, np.array([0.0, 0.0, 1.0]), out)
    return v / n


def dot(a, b):
    return np.sum(a * b, axis=-1)


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray  # unit
    t_near: float
    t_far: float

    def __post_init__(self):
        if abs(np.linalg.norm(self.direction) - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")
        if not (0.0 <= self.t_near < self.t_far):
            raise ValueError("require 0 <= t_near < t_far")

    def at(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.origin + t[..., None] * self.direction


@dataclass(frozen=True)
class PointLight:
    position: np.ndarray
    intensity: np.ndarray  # RGB radiant intensity

    def __post_init__(self):
        if np.any(np.asarray(self.intensity) < 0):
            raise ValueError("light intensity must be nonnegative")


@dataclass(frozen=True)
class Camera:
    """Pinhole camera. `rotation` maps camera coords to world coords
    (columns are the right / down / forward axes); camera looks along +z_cam,
    pixel x grows right, pixel y grows down."""

    position: np.ndarray
    rotation: np.ndarray  # (3, 3), world <- camera
    focal: float          # pixels
    width: int
    height: int
    principal: tuple = None  # (cx, cy); defaults to image center

    def __post_init__(self):
        if self.focal <= 0:
            raise ValueError("focal must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dims must be >= 1")
        if self.principal is None:
            object.__setattr__(self, "principal",
                               (self.width / 2.0, self.height / 2.0))

    @property
    def forward(self):
        return self.rotation[:, 2]


def look_at(position, target, up=(0.0, 1.0, 0.0)):
    """World<-camera rotation for a camera at `position` looking at `target`."""
    position = np.asarray(position, dtype=np.float64)
    fwd = normalize(np.asarray(target, dtype=np.float64) - position)
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(fwd, up)
    if np.linalg.norm(right) < 1e-12:  # looking straight along up
        up = np.array([0.0, 0.0, 1.0]) if abs(fwd[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        right = np.cross(fwd, up)
    right = normalize(right)
    down = np.cross(fwd, right)
    rot = np.stack([right, down, fwd], axis=1)
    return rot


def positional_encode(v, n_freqs):
    """gamma(v): interleaved (sin 2^k pi v, cos 2^k pi v) for k = 0..n_freqs-1.

    v may be a scalar or any-shaped array; the encoding axis is appended last.
    """
    if n_freqs < 1:
        raise ValueError("need at least one frequency")
    v = np.asarray(v, dtype=np.float64)
    freqs = (2.0 ** np.arange(n_freqs)) * np.pi
    phase = v[..., None] * freqs  # (..., W)
    out = np.empty(v.shape + (2 * n_freqs,), dtype=np.float64)
    out[..., 0::2] = np.sin(phase)
    out[..., 1::2] = np.cos(phase)
    return out


def encode_points(points, n_freqs):
    """Concatenated gamma(x) || gamma(y) || gamma(z) -> (..., 6 * n_freqs)."""
    points = np.asarray(points, dtype=np.float64)
    enc = positional_encode(points, n_freqs)  # (..., 3, 2W)
    return enc.reshape(points.shape[:-1] + (6 * n_freqs,))


def pixel_directions(camera, px, py):
    """World-space unit directions through continuous pixel coords (px, py)."""
    cx, cy = camera.principal
    x = (np.asarray(px, dtype=np.float64) - cx) / camera.focal
    y = (np.asarray(py, dtype=np.float64) - cy) / camera.focal
    d_cam = np.stack([x, y, np.ones_like(x)], axis=-1)
    d_world = d_cam @ camera.rotation.T
    return normalize(d_world)


def generate_camera_ray(camera, pixel, jitter=(0.5, 0.5), bbox=None):
    """Ray through pixel (i, j) offset by jitter in [0,1)^2.

    t bounds come from intersecting the scene bbox when given, else [1e-3, 1e3].
    """
    i, j = pixel
    if not (0 <= i < camera.width and 0 <= j < camera.height):
        raise ValueError(f"pixel {pixel} outside {camera.width}x{camera.height} image")
    d = pixel_directions(camera, i + jitter[0], j + jitter[1])
    if bbox is not None:
        tn, tf = ray_bbox_range(camera.position[None], d[None], bbox)
        tn, tf = float(tn[0]), float(tf[0])
        if tf <= tn:  # ray misses the scene; keep a degenerate-but-valid span
            tn, tf = 1e-3, 1e-3 + 1e-6
    else:
        tn, tf = 1e-3, 1e3
    return Ray(camera.position, d, max(tn, 0.0), tf)


def generate_image_rays(camera, bbox=None, jitter_rng=None):
    """Origins/dirs/t-bounds for every pixel, row-major. Jittered when rng given."""
    jj, ii = np.meshgrid(np.arange(camera.height), np.arange(camera.width),
                         indexing="ij")
    if jitter_rng is None:
        u = v = 0.5
    else:
        u = jitter_rng.random(ii.shape)
        v = jitter_rng.random(ii.shape)
    dirs = pixel_directions(camera, ii + u, jj + v).reshape(-1, 3)
    origins = np.broadcast_to(camera.position, dirs.shape)
    if bbox is not None:
        tn, tf = ray_bbox_range(origins, dirs, bbox)
    else:
        tn = np.full(len(dirs), 1e-3)
        tf = np.full(len(dirs), 1e3)
    return origins, dirs, tn, tf


def project(camera, point):
    """World point -> continuous pixel coords (px, py)."""
    p_cam = camera.rotation.T @ (np.asarray(point, dtype=np.float64) - camera.position)
    if p_cam[2] <= 0:
        raise ValueError("point behind camera")
    cx, cy = camera.principal
    return (cx + camera.focal * p_cam[0] / p_cam[2],
            cy + camera.focal * p_cam[1] / p_cam[2])


def ray_bbox_range(origins, dirs, bbox):
    """Slab intersection of rays with an axis-aligned box.

    bbox is (min_xyz, max_xyz). Returns (t_near, t_far); t_far <= t_near where
    a ray misses the box. t_near is clamped to a small positive value.
    """
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bbox)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t0 = (lo - origins) * inv
        t1 = (hi - origins) * inv
    tmin = np.nanmax(np.minimum(t0, t1), axis=-1)
    tmax = np.nanmin(np.maximum(t0, t1), axis=-1)
    tn = np.maximum(tmin, 1e-4)
    return tn, np.maximum(tmax, tn)
