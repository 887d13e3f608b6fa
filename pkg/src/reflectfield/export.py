"""Discrete volume export for external Monte-Carlo renderers.

Voxels are sampled at their centers from a field function and written as
row-major little-endian 32-bit records of (sigma, albedo rgb, roughness,
normal xyz), 8 floats per voxel, after a self-describing header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

VOLUME_MAGIC = b"NRFVOL01"
CHANNELS = ("sigma", "albedo", "roughness", "normal")
VOXEL_FLOATS = 8


@dataclass
class VolumeGrid:
    dims: tuple               # (nx, ny, nz)
    bbox: tuple
    data: np.ndarray          # (nx, ny, nz, 8) float32


def voxel_centers(dims, bbox):
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bbox)
    axes = [lo[i] + (np.arange(dims[i]) + 0.5) / dims[i] * (hi[i] - lo[i])
            for i in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    return np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)


def sample_volume(field_fn, dims, bbox, chunk=65536):
    """Evaluate a field at all voxel centers -> VolumeGrid."""
    if min(dims) < 2:
        raise ValueError("each grid dimension must be >= 2")
    centers = voxel_centers(dims, bbox)
    data = np.empty((len(centers), VOXEL_FLOATS), dtype=np.float32)
    for s in range(0, len(centers), chunk):
        sl = slice(s, min(s + chunk, len(centers)))
        out = field_fn(centers[sl])
        data[sl, 0] = out.sigma
        data[sl, 1:4] = out.albedo
        data[sl, 4] = out.roughness
        data[sl, 5:8] = out.normal
    return VolumeGrid(tuple(dims), (np.asarray(bbox[0], dtype=np.float64),
                                    np.asarray(bbox[1], dtype=np.float64)),
                      data.reshape(tuple(dims) + (VOXEL_FLOATS,)))


def write_volume(path, grid):
    with open(path, "wb") as f:
        f.write(VOLUME_MAGIC)
        f.write(struct.pack("<iii", *grid.dims))
        f.write(np.ascontiguousarray(
            np.concatenate([grid.bbox[0], grid.bbox[1]]), dtype="<f8").tobytes())
        f.write(struct.pack("<i", len(CHANNELS)))
        for name in CHANNELS:
            enc = name.encode("ascii")
            f.write(struct.pack("<i", len(enc)) + enc)
        f.write(np.ascontiguousarray(grid.data, dtype="<f4").tobytes())


def read_volume(path):
    with open(path, "rb") as f:
        if f.read(8) != VOLUME_MAGIC:
            raise ValueError(f"{path}: not a volume export")
        dims = struct.unpack("<iii", f.read(12))
        b = np.frombuffer(f.read(48), dtype="<f8")
        n_ch, = struct.unpack("<i", f.read(4))
        names = []
        for _ in range(n_ch):
            ln, = struct.unpack("<i", f.read(4))
            names.append(f.read(ln).decode("ascii"))
        if tuple(names) != CHANNELS:
            raise ValueError(f"{path}: unexpected channel list {names}")
        count = dims[0] * dims[1] * dims[2] * VOXEL_FLOATS
        data = np.frombuffer(f.read(4 * count), dtype="<f4").reshape(
            dims + (VOXEL_FLOATS,)).copy()
    return VolumeGrid(dims, (b[:3].copy(), b[3:].copy()), data)


def trilinear_sigma(grid, points):
    """Trilinearly interpolated density channel at world points."""
    lo, hi = grid.bbox
    dims = np.array(grid.dims)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    # continuous voxel coordinates with centers at integer + 0.5
    u = (points - lo) / (hi - lo) * dims - 0.5
    u = np.clip(u, 0.0, dims - 1.0)
    i0 = np.minimum(np.floor(u).astype(int), dims - 2)
    frac = u - i0
    sig = grid.data[..., 0].astype(np.float64)
    out = np.zeros(len(points))
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                wgt = (np.where(dx, frac[:, 0], 1 - frac[:, 0])
                       * np.where(dy, frac[:, 1], 1 - frac[:, 1])
                       * np.where(dz, frac[:, 2], 1 - frac[:, 2]))
                out += wgt * sig[i0[:, 0] + dx, i0[:, 1] + dy, i0[:, 2] + dz]
    return out
