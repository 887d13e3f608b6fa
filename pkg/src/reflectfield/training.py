"""Scene-specific optimization of the coarse and fine field networks.

Training only ever renders the collocated configuration (light at the
camera), where the light transmittance equals the view transmittance, so no
light rays are marched. The reverse pass is hand-derived: radiance ->
per-sample (density, normal, albedo, roughness) -> raw head vector ->
network parameters. Fine-pass sample *positions* are treated as constants
(no gradient flows through the importance-sampling placement).
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from .brdf import eval_microfacet, microfacet_backward
from .geometry import encode_points, pixel_directions
from .mlp import (MlpParams, apply_heads, heads_backward, init_params,
                  load_checkpoint, mlp_backward, mlp_forward, save_checkpoint,
                  zero_grads)
from .raymarch import (importance_sample, merge_samples, step_sizes,
                       stratified_sample)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    beta: float = 1e-4          # transmittance regularizer weight
    rays_per_batch: int = 2500
    iterations: int = 20000
    seed: int = 0
    n_coarse: int = 64
    n_fine: int = 128
    tau_clamp: float = 1e-5
    checkpoint_every: int = 1000
    width: int = 128
    n_freqs: int = 10
    ray_chunk: int = 128        # rays processed per forward/backward chunk

    def __post_init__(self):
        if min(self.learning_rate, self.beta, self.rays_per_batch,
               self.iterations, self.n_coarse, self.n_fine,
               self.tau_clamp) <= 0:
            raise ValueError("config values must be positive")
        if self.tau_clamp >= 0.5:
            raise ValueError("tau_clamp must be < 0.5")


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0


def adam_init(params):
    return AdamState([np.zeros_like(w) for w in params.weights]
                     + [np.zeros_like(b) for b in params.biases],
                     [np.zeros_like(w) for w in params.weights]
                     + [np.zeros_like(b) for b in params.biases])


def adam_update(params, grads, state, lr, b1=0.9, b2=0.999, eps=1e-8):
    state.step += 1
    t = state.step
    tensors = params.weights + params.biases
    gtensors = grads.weights + grads.biases
    for i, (p, g) in enumerate(zip(tensors, gtensors)):
        state.m[i] = b1 * state.m[i] + (1 - b1) * g
        state.v[i] = b2 * state.v[i] + (1 - b2) * g * g
        m_hat = state.m[i] / (1 - b1 ** t)
        v_hat = state.v[i] / (1 - b2 ** t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)


def total_loss(l_coarse, l_fine, l_gt, tau_exit, beta, eps):
    """Summed squared error of both passes plus the binary-transmittance term."""
    tau = np.clip(tau_exit, eps, 1.0 - eps)
    data = np.sum((l_coarse - l_gt) ** 2) + np.sum((l_fine - l_gt) ** 2)
    reg = beta * np.sum(np.log(tau) + np.log(1.0 - tau))
    return data + reg


def sample_batch(dataset, n_rays, rng, jitter=True):
    """Uniformly random (view, pixel) rays with their ground-truth colors."""
    n_views = len(dataset.images)
    h, w = dataset.images[0].shape[:2]
    view = rng.integers(0, n_views, size=n_rays)
    px = rng.integers(0, w, size=n_rays)
    py = rng.integers(0, h, size=n_rays)
    u = rng.random((n_rays, 2)) if jitter else np.full((n_rays, 2), 0.5)

    origins = np.empty((n_rays, 3))
    dirs = np.empty((n_rays, 3))
    gt = np.empty((n_rays, 3))
    intensity = np.empty((n_rays, 3))
    for vi in np.unique(view):
        sel = view == vi
        cam = dataset.cameras[vi]
        dirs[sel] = pixel_directions(cam, px[sel] + u[sel, 0], py[sel] + u[sel, 1])
        origins[sel] = cam.position
        gt[sel] = dataset.images[vi][py[sel], px[sel]]
        intensity[sel] = dataset.lights[vi].intensity
    from .geometry import ray_bbox_range
    tn, tf = ray_bbox_range(origins, dirs, dataset.bbox)
    # rays that miss the box get a hairline span well away from the camera,
    # clear of the inverse-square singularity of the collocated light
    miss = tf <= tn
    tn = np.where(miss, 1.0, np.maximum(tn, 1e-3))
    tf = np.where(miss, 1.0 + 1e-6, tf)
    return dict(origins=origins, dirs=dirs, t_near=tn, t_far=tf, gt=gt,
                intensity=intensity, view=view, px=px, py=py)


def _collocated_pass(params, origins, dirs, t, dt, intensity, n_freqs):
    """Forward evaluation of one pass; returns everything backward needs."""
    pts = origins[:, None, :] + t[..., None] * dirs[:, None, :]
    enc = encode_points(pts.reshape(-1, 3), n_freqs)
    raw, cache = mlp_forward(params, enc, need_cache=True)
    out = apply_heads(raw)
    shape = t.shape
    sigma = out.sigma.reshape(shape)

    w_dir = -dirs[:, None, :]                      # w_o == w_i, unit
    w_flat = np.broadcast_to(w_dir, pts.shape).reshape(-1, 3)
    dist = np.maximum(t.reshape(-1), 1e-6)
    l_l = intensity[:, None, :].repeat(shape[1], axis=1).reshape(-1, 3) \
        / (dist * dist)[:, None]
    f = eval_microfacet(out.normal, w_flat, w_flat, out.albedo, out.roughness)
    shaded = (f * l_l).reshape(shape + (3,))

    od = sigma * dt
    tau = np.exp(-(np.cumsum(od, axis=1) - od))    # exclusive prefix
    alpha = -np.expm1(-od)
    w = tau * tau * alpha                          # collocated: tau_l == tau_c
    tau_exit = np.exp(-od.sum(axis=1))
    radiance = np.sum(w[..., None] * shaded, axis=1)  # black background
    return dict(raw=raw, cache=cache, out=out, sigma=sigma, tau=tau,
                alpha=alpha, w=w, tau_exit=tau_exit, shaded=shaded,
                l_l=l_l, w_flat=w_flat, dt=dt, radiance=radiance)


def _collocated_pass_backward(params, fwd, d_radiance, d_tau_exit, grads):
    """Pull d(loss)/d(radiance, tau_exit) back into parameter gradients."""
    shape = fwd["sigma"].shape
    w, shaded, tau, alpha, sigma, dt = (fwd[k] for k in
                                        ("w", "shaded", "tau", "alpha",
                                         "sigma", "dt"))
    d_shaded = w[..., None] * d_radiance[:, None, :]
    d_f = (d_shaded.reshape(-1, 3)) * fwd["l_l"]
    out = fwd["out"]
    d_n, d_albedo, d_rough = microfacet_backward(
        out.normal, fwd["w_flat"], fwd["w_flat"], out.albedo, out.roughness, d_f)

    # density gradient: own-alpha term + suffix term through the tau^2 prefix
    # + exit transmittance term
    g = np.sum(d_radiance[:, None, :] * shaded, axis=2)        # (R, N)
    wg = w * g
    suffix = wg.sum(axis=1, keepdims=True) - np.cumsum(wg, axis=1)
    d_sigma = (tau * tau * np.exp(-sigma * dt) * dt * g
               - 2.0 * dt * suffix
               - dt * fwd["tau_exit"][:, None] * d_tau_exit[:, None])

    d_raw = heads_backward(fwd["raw"], d_sigma.reshape(-1), d_n, d_albedo,
                           d_rough)
    mlp_backward(params, fwd["cache"], d_raw, grads)


def forward_backward_batch(coarse, fine, batch, cfg, rng, frozen_fine_t=None,
                           want_grads=True):
    """Loss and (optionally) parameter gradients for one collocated batch.

    With `frozen_fine_t` given, the fine-pass sample positions are taken as-is
    instead of importance-sampled (used by gradient checks, which must not see
    the placement's dependence on the coarse network).
    """
    origins, dirs = batch["origins"], batch["dirs"]
    tn, tf, gt, intensity = (batch[k] for k in ("t_near", "t_far", "gt",
                                                "intensity"))
    n_rays = len(origins)
    grads_c = zero_grads(coarse) if want_grads else None
    grads_f = zero_grads(fine) if want_grads else None
    loss = 0.0
    eps = cfg.tau_clamp

    for s in range(0, n_rays, cfg.ray_chunk):
        sl = slice(s, min(s + cfg.ray_chunk, n_rays))
        t_c = stratified_sample(tn[sl], tf[sl], cfg.n_coarse, rng)
        dt_c = step_sizes(t_c, tf[sl])
        fc = _collocated_pass(coarse, origins[sl], dirs[sl], t_c, dt_c,
                              intensity[sl], cfg.n_freqs)

        a = fc["tau"] * fc["alpha"]
        if frozen_fine_t is None:
            t_f = importance_sample(a, tn[sl], tf[sl], cfg.n_fine, rng)
        else:
            t_f = frozen_fine_t[sl]
        t_all = merge_samples(t_c, t_f)
        dt_all = step_sizes(t_all, tf[sl])
        ff = _collocated_pass(fine, origins[sl], dirs[sl], t_all, dt_all,
                              intensity[sl], cfg.n_freqs)

        l_c, l_f, tau_exit = fc["radiance"], ff["radiance"], ff["tau_exit"]
        chunk_loss = total_loss(l_c, l_f, gt[sl], tau_exit, cfg.beta, eps)
        if not np.isfinite(chunk_loss):
            bad = np.flatnonzero(~np.isfinite(
                np.sum((l_c - gt[sl]) ** 2 + (l_f - gt[sl]) ** 2, axis=1)))
            rid = (s + bad[0]) if len(bad) else s
            raise FloatingPointError(
                f"non-finite loss at ray {rid} "
                f"(view {batch['view'][rid]}, pixel "
                f"{batch['px'][rid]},{batch['py'][rid]})")
        loss += chunk_loss

        if want_grads:
            d_lc = 2.0 * (l_c - gt[sl])
            d_lf = 2.0 * (l_f - gt[sl])
            interior = (tau_exit > eps) & (tau_exit < 1.0 - eps)
            d_tau = np.where(interior,
                             cfg.beta * (1.0 / np.maximum(tau_exit, eps)
                                         - 1.0 / np.maximum(1.0 - tau_exit, eps)),
                             0.0)
            _collocated_pass_backward(coarse, fc, d_lc, np.zeros(len(d_lc)),
                                      grads_c)
            _collocated_pass_backward(fine, ff, d_lf, d_tau, grads_f)
    return loss, grads_c, grads_f


def train_step(coarse, fine, opt_c, opt_f, batch, cfg, rng):
    loss, grads_c, grads_f = forward_backward_batch(coarse, fine, batch, cfg, rng)
    adam_update(coarse, grads_c, opt_c, cfg.learning_rate)
    adam_update(fine, grads_f, opt_f, cfg.learning_rate)
    return loss


def train(dataset, cfg, out_dir, resume=False, log_every=50):
    """Full optimization loop with periodic checkpoints and a plain loss log."""
    os.makedirs(out_dir, exist_ok=True)
    ckpt_c = os.path.join(out_dir, "ckpt_coarse.bin")
    ckpt_f = os.path.join(out_dir, "ckpt_fine.bin")
    state_path = os.path.join(out_dir, "state.txt")
    log_path = os.path.join(out_dir, "loss_log.txt")

    start_iter = 0
    if resume and os.path.isfile(state_path):
        with open(state_path, encoding="utf-8") as f:
            start_iter = int(f.read().split()[0])
        coarse = load_checkpoint(ckpt_c)
        fine = load_checkpoint(ckpt_f)
    else:
        coarse = init_params(cfg.seed, cfg.width, cfg.n_freqs)
        fine = init_params(cfg.seed + 1, cfg.width, cfg.n_freqs)
    opt_c, opt_f = adam_init(coarse), adam_init(fine)
    opt_c.step = opt_f.step = start_iter

    rng = np.random.default_rng(cfg.seed + 1000 + start_iter)
    t0 = time.time()
    log = open(log_path, "a", encoding="utf-8")
    try:
        for it in range(start_iter, cfg.iterations):
            batch = sample_batch(dataset, cfg.rays_per_batch, rng)
            loss = train_step(coarse, fine, opt_c, opt_f, batch, cfg, rng)
            if (it + 1) % log_every == 0 or it == start_iter:
                log.write(f"{it + 1}\t{loss:.8g}\t{time.time() - t0:.3f}\n")
                log.flush()
            if (it + 1) % cfg.checkpoint_every == 0 or it + 1 == cfg.iterations:
                save_checkpoint(ckpt_c, coarse)
                save_checkpoint(ckpt_f, fine)
                with open(state_path, "w", encoding="utf-8") as f:
                    f.write(f"{it + 1}\n")
    finally:
        log.close()
    return coarse, fine
