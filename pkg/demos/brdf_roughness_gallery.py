"""Render the same sphere at several microfacet roughness values.

The shading model is a GGX microfacet lobe (height-correlated Smith
visibility, Schlick Fresnel) on top of a Lambertian base. Sweeping the
roughness from mirror-adjacent to matte shows the specular highlight
spreading out.

    python3 demos/brdf_roughness_gallery.py [out_dir]
"""

import sys

import numpy as np

from reflectfield.geometry import Camera, PointLight, look_at
from reflectfield.raymarch import RenderSettings, render_image
from reflectfield.report import Report, emit_report
from reflectfield.scenes import make_scene

RESOLUTION = 80
ROUGHNESS = (0.08, 0.2, 0.4, 0.8)

out_dir = sys.argv[1] if len(sys.argv) > 1 else "artifacts/demo_brdf"

pos = np.array([0.0, 0.9, 2.3])
cam = Camera(pos, look_at(pos, np.zeros(3)), 1.1 * RESOLUTION,
             RESOLUTION, RESOLUTION)
light = PointLight(pos, np.full(3, 10.0))
settings = RenderSettings(64, 64)

report = Report()
for rough in ROUGHNESS:
    scene = make_scene("homog-sphere", roughness=rough,
                       albedo_a=(0.5, 0.25, 0.15))
    scene.blobs[0].sigma0 = 40.0  # near-opaque so the surface lobe dominates
    img = render_image(cam, light, scene.field, scene.field, settings,
                       scene.bbox)
    print(f"roughness {rough}: peak radiance {img.max():.3f}")
    report.add_image(f"roughness {rough}", img)

emit_report(report, out_dir)
print(f"wrote gallery montage to {out_dir}")
