"""Adaptive light-transmittance volume for shadowing under arbitrary lights.

A virtual camera is placed at the point light looking at the scene bounding
box; each virtual pixel ray carries a coarse-to-fine set of depth samples
with the running transmittance at each. Queries project the shading point
into the virtual image and interpolate bilinearly across the four nearest
rays and piecewise-linearly in depth (clamping past the first/last sample).
Points outside the frustum are unoccluded by construction and return 1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .geometry import look_at, ray_bbox_range
from .raymarch import (contribution_weights, importance_sample, merge_samples,
                       step_sizes, stratified_sample, view_transmittance)

CACHE_MAGIC = b"NRFLCCH1"
FOV_MARGIN = 1.05  # widen the minimal bbox cone by 5%


@dataclass
class TransmittanceVolume:
    light_position: np.ndarray
    rotation: np.ndarray      # world <- light-camera
    focal: float
    resolution: tuple         # (ru, rv)
    ts: np.ndarray            # (rv, ru, M) distance from the light, sorted
    taus: np.ndarray          # (rv, ru, M) non-increasing, starts at 1
    bbox: tuple


def _fit_frustum(light_pos, bbox, resolution):
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bbox)
    if np.all(light_pos >= lo) and np.all(light_pos <= hi):
        raise ValueError("light inside the scene bounding box is not supported")
    center = 0.5 * (lo + hi)
    rot = look_at(light_pos, center)
    fwd = rot[:, 2]
    corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                        for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    dirs = corners - light_pos
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    cos = np.clip(dirs @ fwd, -1.0, 1.0)
    half_angle = np.arccos(cos.min()) * FOV_MARGIN
    half_angle = min(half_angle, 0.49 * np.pi)
    focal = (resolution / 2.0) / np.tan(half_angle)
    return rot, focal


def build_transmittance_volume(coarse_field, fine_field, light, bbox,
                               resolution=128, n_coarse=64, n_fine=128,
                               rng=None):
    """March one ray per virtual pixel; coarse pass places the fine samples."""
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if rng is None:
        rng = np.random.default_rng(0)
    light_pos = np.asarray(light.position, dtype=np.float64)
    rot, focal = _fit_frustum(light_pos, bbox, resolution)

    ru = rv = resolution
    cx = cy = resolution / 2.0
    jj, ii = np.meshgrid(np.arange(rv), np.arange(ru), indexing="ij")
    x = (ii + 0.5 - cx) / focal
    y = (jj + 0.5 - cy) / focal
    d_cam = np.stack([x, y, np.ones_like(x)], axis=-1).reshape(-1, 3)
    dirs = d_cam @ rot.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.broadcast_to(light_pos, dirs.shape)
    tn, tf = ray_bbox_range(origins, dirs, bbox)
    miss = tf <= tn
    tf = np.where(miss, tn + 1e-6, tf)

    # one extra sample at the far bound stores the exit transmittance, so
    # queries behind the volume clamp to the fully-shadowed value
    m = n_coarse + n_fine + 1
    ts = np.empty((len(dirs), m))
    taus = np.empty((len(dirs), m))
    chunk = 4096
    for s in range(0, len(dirs), chunk):
        sl = slice(s, min(s + chunk, len(dirs)))
        t_c = stratified_sample(tn[sl], tf[sl], n_coarse, rng)
        dt_c = step_sizes(t_c, tf[sl])
        pts = origins[sl, None, :] + t_c[..., None] * dirs[sl, None, :]
        sig_c = coarse_field(pts.reshape(-1, 3)).sigma.reshape(t_c.shape)
        a, _, _ = contribution_weights(sig_c, dt_c)
        t_f = importance_sample(a, tn[sl], tf[sl], n_fine, rng)
        t_all = merge_samples(t_c, t_f)
        dt_all = step_sizes(t_all, tf[sl])
        pts = origins[sl, None, :] + t_all[..., None] * dirs[sl, None, :]
        sig = fine_field(pts.reshape(-1, 3)).sigma.reshape(t_all.shape)
        ts[sl, :-1] = t_all
        ts[sl, -1] = tf[sl]
        taus[sl, :-1] = view_transmittance(sig, dt_all)
        taus[sl, -1] = np.exp(-np.sum(sig * dt_all, axis=1))
    taus[miss] = 1.0

    return TransmittanceVolume(light_pos, rot, focal, (ru, rv),
                               ts.reshape(rv, ru, m), taus.reshape(rv, ru, m),
                               (np.asarray(bbox[0], dtype=np.float64),
                                np.asarray(bbox[1], dtype=np.float64)))


def _interp_along_rays(vol, iu, iv, t):
    """Piecewise-linear tau(t) on the rays indexed by (iu, iv); clamped ends."""
    ts = vol.ts[iv, iu]      # (P, M)
    taus = vol.taus[iv, iu]
    m = ts.shape[-1]
    idx = np.sum(ts < t[:, None], axis=1)  # first sample >= t
    lo = np.clip(idx - 1, 0, m - 1)
    hi = np.clip(idx, 0, m - 1)
    t_lo = np.take_along_axis(ts, lo[:, None], axis=1)[:, 0]
    t_hi = np.take_along_axis(ts, hi[:, None], axis=1)[:, 0]
    v_lo = np.take_along_axis(taus, lo[:, None], axis=1)[:, 0]
    v_hi = np.take_along_axis(taus, hi[:, None], axis=1)[:, 0]
    denom = np.where(t_hi > t_lo, t_hi - t_lo, 1.0)
    frac = np.clip((t - t_lo) / denom, 0.0, 1.0)
    return v_lo + frac * (v_hi - v_lo)


def query_transmittance(vol, points):
    """Interpolated light transmittance at world points (P, 3) (or a single one)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    rel = points - vol.light_position
    p_cam = rel @ vol.rotation  # == rotation.T applied per row
    out = np.ones(len(points))
    z = p_cam[:, 2]
    ok = z > 1e-9
    if not np.any(ok):
        return out if len(out) > 1 else out
    ru, rv = vol.resolution
    cx = cy = ru / 2.0
    px = cx + vol.focal * p_cam[ok, 0] / z[ok]
    py = cy + vol.focal * p_cam[ok, 1] / z[ok]
    # continuous coords in ray-center space
    fx = px - 0.5
    fy = py - 0.5
    inside = (fx >= 0.0) & (fx <= ru - 1) & (fy >= 0.0) & (fy <= rv - 1)
    sub = np.flatnonzero(ok)[inside]
    if len(sub) == 0:
        return out
    fx, fy = fx[inside], fy[inside]
    x0 = np.clip(np.floor(fx).astype(int), 0, ru - 2)
    y0 = np.clip(np.floor(fy).astype(int), 0, rv - 2)
    wx = fx - x0
    wy = fy - y0
    t = np.linalg.norm(rel[sub], axis=-1)

    v00 = _interp_along_rays(vol, x0, y0, t)
    v10 = _interp_along_rays(vol, x0 + 1, y0, t)
    v01 = _interp_along_rays(vol, x0, y0 + 1, t)
    v11 = _interp_along_rays(vol, x0 + 1, y0 + 1, t)
    out[sub] = ((1 - wx) * (1 - wy) * v00 + wx * (1 - wy) * v10
                + (1 - wx) * wy * v01 + wx * wy * v11)
    return out


def save_cache(path, vol):
    """Binary dump with the same header discipline as network checkpoints."""
    ru, rv = vol.resolution
    m = vol.ts.shape[-1]
    with open(path, "wb") as f:
        f.write(CACHE_MAGIC)
        f.write(struct.pack("<iii", ru, rv, m))
        f.write(np.ascontiguousarray(vol.light_position, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(vol.rotation, dtype="<f8").tobytes())
        f.write(struct.pack("<d", vol.focal))
        f.write(np.ascontiguousarray(np.concatenate([vol.bbox[0], vol.bbox[1]]),
                                     dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(vol.ts, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(vol.taus, dtype="<f8").tobytes())


def load_cache(path):
    with open(path, "rb") as f:
        if f.read(8) != CACHE_MAGIC:
            raise ValueError(f"{path}: not a transmittance cache")
        ru, rv, m = struct.unpack("<iii", f.read(12))
        light_pos = np.frombuffer(f.read(24), dtype="<f8").copy()
        rot = np.frombuffer(f.read(72), dtype="<f8").reshape(3, 3).copy()
        focal, = struct.unpack("<d", f.read(8))
        b = np.frombuffer(f.read(48), dtype="<f8")
        ts = np.frombuffer(f.read(8 * rv * ru * m), dtype="<f8").reshape(rv, ru, m).copy()
        taus = np.frombuffer(f.read(8 * rv * ru * m), dtype="<f8").reshape(rv, ru, m).copy()
    return TransmittanceVolume(light_pos, rot, focal, (ru, rv), ts, taus,
                               (b[:3].copy(), b[3:].copy()))
