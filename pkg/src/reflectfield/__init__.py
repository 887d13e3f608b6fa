"""Continuous reflectance-field scene representation with a physically-based
differentiable ray marcher: fit density/normal/BRDF fields to collocated
camera-light captures, then re-render under arbitrary view and point light
with shadows from an adaptive light-transmittance cache."""

from .geometry import (Camera, PointLight, Ray, encode_points, look_at,
                       positional_encode, vec3)
from .mlp import (FieldOutput, MlpParams, field_forward, init_params,
                  load_checkpoint, make_mlp_field, save_checkpoint)
from .raymarch import RenderSettings, render_image
from .scenes import AnalyticScene, make_scene, render_ground_truth
from .training import TrainConfig, train

__all__ = [
    "Camera", "PointLight", "Ray", "encode_points", "look_at",
    "positional_encode", "vec3", "FieldOutput", "MlpParams", "field_forward",
    "init_params", "load_checkpoint", "make_mlp_field", "save_checkpoint",
    "RenderSettings", "render_image", "AnalyticScene", "make_scene",
    "render_ground_truth", "TrainConfig", "train",
]
__version__ = "0.1.0"
