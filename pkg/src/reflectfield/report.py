"""Static comparison artifacts: PSNR, image montages, CSV series and
small rasterized line charts (no plotting stack; charts are drawn directly
into a pixel buffer so re-runs are byte-identical)."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

PSNR_SENTINEL = 99.0  # reported for identical images


def psnr(a, b, peak=1.0):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0.0:
        return PSNR_SENTINEL
    return min(10.0 * np.log10(peak * peak / mse), PSNR_SENTINEL)


@dataclass
class Report:
    images: list = field(default_factory=list)   # (label, (H, W, 3) linear)
    series: list = field(default_factory=list)   # (label, x array, y array)

    def add_image(self, label, image):
        self._check_label(label)
        self.images.append((label, np.asarray(image, dtype=np.float64)))

    def add_series(self, label, x, y):
        self._check_label(label)
        self.series.append((label, np.asarray(x, dtype=np.float64),
                            np.asarray(y, dtype=np.float64)))

    def _check_label(self, label):
        used = [l for l, *_ in self.images] + [l for l, *_ in self.series]
        if label in used:
            raise ValueError(f"duplicate label {label!r}")


def montage(images, gap=2, gamma=2.2):
    """Horizontal strip of tone-mapped images separated by white gaps."""
    tiles = []
    h = max(img.shape[0] for img in images)
    for img in images:
        t = np.clip(img, 0.0, 1.0) ** (1.0 / gamma)
        if t.ndim == 2:
            t = np.stack([t] * 3, axis=-1)
        if t.shape[0] < h:
            pad = np.ones((h - t.shape[0], t.shape[1], 3))
            t = np.concatenate([t, pad], axis=0)
        tiles.append(t)
        tiles.append(np.ones((h, gap, 3)))
    strip = np.concatenate(tiles[:-1], axis=1)
    return np.round(strip * 255.0).astype(np.uint8)


def rasterize_chart(x, y, width=640, height=360, margin=40):
    """Axes plus a polyline, drawn into a white uint8 buffer."""
    img = np.full((height, width, 3), 255, dtype=np.uint8)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    img[height - margin, margin:width - margin // 2] = 0
    img[margin // 2:height - margin + 1, margin] = 0
    if len(x) == 0:
        return img
    xr = (x.min(), x.max() if x.max() > x.min() else x.min() + 1.0)
    yr = (y.min(), y.max() if y.max() > y.min() else y.min() + 1.0)
    px = margin + (x - xr[0]) / (xr[1] - xr[0]) * (width - 1.5 * margin)
    py = (height - margin) - (y - yr[0]) / (yr[1] - yr[0]) * (height - 1.5 * margin)
    for i in range(len(x) - 1):
        n = int(max(abs(px[i + 1] - px[i]), abs(py[i + 1] - py[i]))) + 1
        xs = np.round(np.linspace(px[i], px[i + 1], n)).astype(int)
        ys = np.round(np.linspace(py[i], py[i + 1], n)).astype(int)
        keep = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
        img[ys[keep], xs[keep]] = (180, 30, 30)
    return img


def emit_report(report, out_dir):
    """Write the montage, one chart per series, and CSV data; deterministic."""
    from PIL import Image

    os.makedirs(out_dir, exist_ok=True)
    written = []
    if report.images:
        path = os.path.join(out_dir, "montage.png")
        Image.fromarray(montage([img for _, img in report.images])).save(path)
        written.append(path)
        with open(os.path.join(out_dir, "montage_labels.txt"), "w",
                  encoding="utf-8") as f:
            f.write("\n".join(label for label, _ in report.images) + "\n")
    for label, x, y in report.series:
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in label)
        cpath = os.path.join(out_dir, f"{safe}.csv")
        with open(cpath, "w", encoding="utf-8") as f:
            for xi, yi in zip(x, y):
                f.write(f"{xi:.10g},{yi:.10g}\n")
        ppath = os.path.join(out_dir, f"{safe}.png")
        Image.fromarray(rasterize_chart(x, y)).save(ppath)
        written.extend([cpath, ppath])
    return written


def read_loss_log(path):
    """Parse 'iter<TAB>loss<TAB>seconds' lines -> (iters, losses, seconds)."""
    iters, losses, secs = [], [], []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            a, b, c = line.split("\t")
            iters.append(int(a))
            losses.append(float(b))
            secs.append(float(c))
    return np.array(iters), np.array(losses), np.array(secs)
