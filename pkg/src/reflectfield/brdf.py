"""Reflectance models plugged into the ray-marching estimator.

`eval_microfacet` is a Lambertian + GGX specular surface BRDF (Smith
height-correlated shadowing, Schlick Fresnel with fixed f0, alpha =
roughness^2 perceptual remap). `eval_fur` is the classical fiber model
driven by a tangent vector instead of a normal. All functions broadcast
over leading axes; directions must be unit length.

Below-horizon configurations clamp to zero (opaque surfaces), and the
reverse-mode derivatives are exactly zero in the clamped region.
"""

from __future__ import annotations

import numpy as np

F0_DEFAULT = 0.04  # Fresnel reflectance at normal incidence, not learned


def _ggx_terms(n, wo, wi, roughness):
    """Shared dot products and GGX factors; everything is (...,)-shaped."""
    ci = np.sum(n * wi, axis=-1)
    co = np.sum(n * wo, axis=-1)
    lit = (ci > 0.0) & (co > 0.0)

    h = wi + wo
    hn = np.linalg.norm(h, axis=-1, keepdims=True)
    h = h / np.where(hn < 1e-12, 1.0, hn)
    ch = np.sum(n * h, axis=-1)
    cd = np.sum(wi * h, axis=-1)  # == wo . h

    alpha = roughness * roughness
    a2 = alpha * alpha
    q = ch * ch * (a2 - 1.0) + 1.0
    d_ggx = a2 / (np.pi * q * q)

    # Height-correlated Smith visibility V = G / (4 ci co)
    k = 1.0 - a2
    ci_s = np.where(lit, ci, 1.0)  # keep sqrt args sane in clamped region
    co_s = np.where(lit, co, 1.0)
    si = np.sqrt(ci_s * ci_s * k + a2)
    so = np.sqrt(co_s * co_s * k + a2)
    u = co_s * si + ci_s * so
    vis = 0.5 / u

    fres = F0_DEFAULT + (1.0 - F0_DEFAULT) * (1.0 - np.clip(cd, 0.0, 1.0)) ** 5
    return lit, ci_s, co_s, ch, alpha, q, d_ggx, k, si, so, u, vis, fres


def eval_microfacet(n, wo, wi, albedo, roughness):
    """BRDF value f_r (cosine NOT folded in), zero below the horizon."""
    n, wo, wi = (np.asarray(x, dtype=np.float64) for x in (n, wo, wi))
    albedo = np.asarray(albedo, dtype=np.float64)
    roughness = np.asarray(roughness, dtype=np.float64)
    lit, _, _, _, _, _, d_ggx, _, _, _, _, vis, fres = _ggx_terms(n, wo, wi, roughness)
    spec = d_ggx * vis * fres
    f = albedo / np.pi + spec[..., None]
    return np.where(lit[..., None], f, 0.0)


def microfacet_backward(n, wo, wi, albedo, roughness, upstream):
    """Exact reverse-mode gradients of eval_microfacet w.r.t. n, albedo, roughness.

    `upstream` is d(loss)/d(rgb), shape (..., 3). Clamped configurations get
    zero gradients.
    """
    n, wo, wi = (np.asarray(x, dtype=np.float64) for x in (n, wo, wi))
    roughness = np.asarray(roughness, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    lit, ci, co, ch, alpha, q, d_ggx, k, si, so, u, vis, fres = _ggx_terms(
        n, wo, wi, roughness)

    up_sum = upstream.sum(axis=-1)          # spec term is achromatic
    d_albedo = np.where(lit[..., None], upstream / np.pi, 0.0)

    # d spec / d alpha, through D and V (Fresnel is alpha-independent)
    a2 = alpha * alpha
    dq_da = 2.0 * alpha * ch * ch
    dD_da = (2.0 * alpha * q - 2.0 * a2 * dq_da) / (np.pi * q ** 3)
    # si = sqrt(ci^2 (1 - a^2) + a^2) => dsi/da = a (1 - ci^2) / si
    dsi_da = alpha * (1.0 - ci * ci) / si
    dso_da = alpha * (1.0 - co * co) / so
    du_da = co * dsi_da + ci * dso_da
    dV_da = -0.5 * du_da / (u * u)
    dspec_da = fres * (dD_da * vis + d_ggx * dV_da)
    d_rough = np.where(lit, up_sum * dspec_da * 2.0 * roughness, 0.0)

    # d spec / d n = (ds/dci) wi + (ds/dco) wo + (ds/dch) h
    du_dci = so + co * ci * k / si
    du_dco = si + ci * co * k / so
    dV_dci = -0.5 * du_dci / (u * u)
    dV_dco = -0.5 * du_dco / (u * u)
    dD_dch = -4.0 * a2 * ch * (a2 - 1.0) / (np.pi * q ** 3)
    ds_dci = fres * d_ggx * dV_dci
    ds_dco = fres * d_ggx * dV_dco
    ds_dch = fres * vis * dD_dch
    h = wi + wo
    hn = np.linalg.norm(h, axis=-1, keepdims=True)
    h = h / np.where(hn < 1e-12, 1.0, hn)
    d_n = (ds_dci[..., None] * wi + ds_dco[..., None] * wo + ds_dch[..., None] * h)
    d_n = np.where(lit[..., None], d_n * up_sum[..., None], 0.0)
    return d_n, d_albedo, d_rough


def eval_fur(tangent, wo, wi, diffuse, specular, exponent):
    """Kajiya-Kay fiber scattering: diffuse sin term + shifted specular lobe."""
    tangent, wo, wi = (np.asarray(x, dtype=np.float64) for x in (tangent, wo, wi))
    diffuse = np.asarray(diffuse, dtype=np.float64)
    specular = np.asarray(specular, dtype=np.float64)
    ct_i = np.clip(np.sum(tangent * wi, axis=-1), -1.0, 1.0)
    ct_o = np.clip(np.sum(tangent * wo, axis=-1), -1.0, 1.0)
    st_i = np.sqrt(1.0 - ct_i * ct_i)
    st_o = np.sqrt(1.0 - ct_o * ct_o)
    spec_base = np.maximum(0.0, ct_i * ct_o + st_i * st_o)
    return diffuse * st_i[..., None] + specular * (spec_base ** exponent)[..., None]
