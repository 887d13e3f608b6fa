"""Self-contained invariant suite behind the `validate` subcommand.

Each check is a small pure function returning (passed, detail). The
telescoping check accepts an injectable weights function so a deliberately
broken implementation can be shown to trip it (mutation canary).
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from . import brdf, geometry, pfm, raymarch
from .scenes import make_scene


def check_empty_medium_transmittance(rng):
    tau = raymarch.view_transmittance(np.zeros((4, 16)), np.full((4, 16), 0.1))
    ok = np.allclose(tau, 1.0)
    return ok, f"max deviation {np.abs(tau - 1).max():.2e}"


def check_telescoping(rng, weights_fn=None):
    """sum(a_j) + tau_exit == 1 for random density/step sequences."""
    if weights_fn is None:
        weights_fn = raymarch.contribution_weights
    worst = 0.0
    for _ in range(1000):
        n = rng.integers(1, 64)
        sig = rng.uniform(0.0, 30.0, size=(1, n))
        dt = rng.uniform(1e-4, 0.1, size=(1, n))
        a, _, tau_exit = weights_fn(sig, dt)
        worst = max(worst, abs(a.sum() + tau_exit[0] - 1.0))
    return worst < 1e-12, f"worst |sum a + tau_exit - 1| = {worst:.2e}"


def check_transmittance_monotone(rng):
    sig = rng.uniform(0.0, 20.0, size=(32, 64))
    dt = rng.uniform(1e-4, 0.1, size=(32, 64))
    tau = raymarch.view_transmittance(sig, dt)
    ok = np.all(np.diff(tau, axis=1) <= 1e-15) and np.all(tau > 0) \
        and np.all(tau <= 1.0)
    return ok, "tau non-increasing in (0, 1]"


def check_brdf_reciprocity(rng):
    n = geometry.normalize(rng.normal(size=(2000, 3)))
    a = geometry.normalize(rng.normal(size=(2000, 3)))
    b = geometry.normalize(rng.normal(size=(2000, 3)))
    alb = rng.uniform(0, 1, size=(2000, 3))
    rough = rng.uniform(0.01, 1.0, size=2000)
    f_ab = brdf.eval_microfacet(n, a, b, alb, rough)
    f_ba = brdf.eval_microfacet(n, b, a, alb, rough)
    worst = np.abs(f_ab - f_ba).max()
    return worst < 1e-12, f"worst asymmetry {worst:.2e}"


def check_brdf_nonnegative(rng):
    n = geometry.normalize(rng.normal(size=(2000, 3)))
    a = geometry.normalize(rng.normal(size=(2000, 3)))
    b = geometry.normalize(rng.normal(size=(2000, 3)))
    alb = rng.uniform(0, 1, size=(2000, 3))
    rough = rng.uniform(0.01, 1.0, size=2000)
    f = brdf.eval_microfacet(n, a, b, alb, rough)
    return np.all(f >= 0.0), f"min value {f.min():.2e}"


def check_encoding_range(rng):
    v = rng.uniform(-1, 1, size=1000)
    enc = geometry.positional_encode(v, 10)
    ok = np.all(np.abs(enc) <= 1.0)
    return ok, f"max |component| = {np.abs(enc).max():.6f}"


def check_stratification(rng):
    t = raymarch.stratified_sample(np.zeros(64), np.ones(64), 8, rng)
    edges = np.arange(9) / 8.0
    ok = np.all((t >= edges[:-1]) & (t < edges[1:]))
    return ok, "every draw inside its own bin"


def check_chord_transmittance(rng):
    scene = make_scene("homog-sphere")
    scene.blobs[0].sigma0 = 2.0  # unit diameter at sigma 2: optical depth 2
    n = 1024
    span = 1.2  # covers the full density support including the falloff band
    h = span / n
    x = -0.6 + (np.arange(n) + 0.5) * h
    pts = np.stack([x, np.zeros(n), np.zeros(n)], axis=1)
    sig = scene.density(pts)[None, :]
    tau_exit = raymarch.exit_transmittance(sig, np.full((1, n), h))
    err = abs(tau_exit[0] - np.exp(-2.0))
    return err < 1e-3, f"|tau - e^-2| = {err:.2e}"


def check_pfm_roundtrip(rng):
    img = rng.random((7, 5, 3)).astype(np.float32)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "t.pfm")
        pfm.write_pfm(path, img)
        back = pfm.read_pfm(path)
    ok = np.array_equal(img, back.astype(np.float32))
    return ok, "32-bit bitwise round trip"


ALL_CHECKS = [
    ("empty-medium-transmittance", check_empty_medium_transmittance),
    ("weights-telescoping", check_telescoping),
    ("transmittance-monotone", check_transmittance_monotone),
    ("brdf-reciprocity", check_brdf_reciprocity),
    ("brdf-nonnegative", check_brdf_nonnegative),
    ("encoding-range", check_encoding_range),
    ("stratified-bins", check_stratification),
    ("chord-transmittance", check_chord_transmittance),
    ("pfm-roundtrip", check_pfm_roundtrip),
]


def run_validation(seed=0, checks=None, out=print):
    """Run every check with a pinned seed; returns True when all pass."""
    all_ok = True
    for name, fn in (checks or ALL_CHECKS):
        rng = np.random.default_rng(seed)
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name:32s} {detail}")
    return all_ok
