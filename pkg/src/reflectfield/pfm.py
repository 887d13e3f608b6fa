"""Portable float map (PFM) reader/writer plus 8-bit PNG previews.

PFM stores rows bottom-to-top; arrays here are top-to-bottom (row 0 at the
top of the image), so both directions flip. The scale field is written as
-1.0 (little-endian data) and 32-bit values round trip bitwise.
"""

from __future__ import annotations

import numpy as np


def write_pfm(path, image):
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[:, :, None]
    if image.shape[2] == 1:
        header, data = b"Pf", image[:, :, 0]
    elif image.shape[2] == 3:
        header, data = b"PF", image
    else:
        raise ValueError("PFM supports 1 or 3 channels")
    h, w = image.shape[:2]
    with open(path, "wb") as f:
        f.write(header + b"\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(data).astype("<f4").tobytes())


def read_pfm(path):
    with open(path, "rb") as f:
        tag = f.readline().strip()
        if tag == b"PF":
            channels = 3
        elif tag == b"Pf":
            channels = 1
        else:
            raise ValueError(f"{path}: not a PFM file")
        w, h = (int(v) for v in f.readline().split())
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(f.read(4 * w * h * channels), dtype=dtype)
    img = data.reshape(h, w, channels) if channels == 3 else data.reshape(h, w)
    return np.flipud(img).copy()


def write_png_preview(path, image, gamma=2.2):
    """Tone-mapped 8-bit preview; never read back by the pipeline."""
    from PIL import Image

    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    img = np.power(img, 1.0 / gamma)
    arr = np.round(img * 255.0).astype(np.uint8)
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    Image.fromarray(arr).save(path)
