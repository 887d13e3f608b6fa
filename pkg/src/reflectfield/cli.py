"""Command-line entry points.

Subcommands: gen-data, train, render, export-volume, validate. Options can
come from a key=value config file (--config) and/or key=value arguments on
the command line (the latter win). Camera/light specs use
"pos=x,y,z lookat=x,y,z fov=deg intensity=r,g,b" style keys.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import config as cfgmod
from . import export, lightcache, pfm, raymarch, scenes, training, validate
from .config import (REQUIRED, ConfigError, parse_bool, parse_ivec3,
                     parse_vec3, read_config_file, resolve)
from .geometry import Camera, PointLight, look_at
from .mlp import load_checkpoint, make_mlp_field

DEFAULT_BBOX_KEY = (lambda t: tuple(np.array([float(v) for v in t.split(",")])
                                    .reshape(2, 3)),
                    ((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0)))

SCHEMAS = {
    "gen-data": {
        "scene": (str, REQUIRED),
        "out": (str, REQUIRED),
        "views": (int, 16),
        "resolution": (int, 64),
        "layout": (str, "sphere"),
        "intensity": (parse_vec3, np.array([8.0, 8.0, 8.0])),
        "step": (float, 4e-3),
        "w_freqs": (int, 10),
        "radius": (float, 2.5),
        "png": (parse_bool, True),
    },
    "train": {
        "dataset": (str, REQUIRED),
        "out": (str, REQUIRED),
        "lr": (float, 1e-4),
        "beta": (float, 1e-4),
        "rays": (int, 2500),
        "iters": (int, 20000),
        "seed": (int, 0),
        "n1": (int, 64),
        "n2": (int, 128),
        "tau_clamp": (float, 1e-5),
        "ckpt_every": (int, 1000),
        "width": (int, 128),
        "resume": (parse_bool, False),
        "threads": (int, 0),
        "deterministic": (parse_bool, False),
    },
    "render": {
        "checkpoints": (str, REQUIRED),   # directory with ckpt_{coarse,fine}.bin
        "out": (str, REQUIRED),
        "pos": (parse_vec3, REQUIRED),
        "lookat": (parse_vec3, np.zeros(3)),
        "fov": (float, 50.0),
        "resolution": (int, 128),
        "light_pos": (parse_vec3, None),  # default: collocated with the camera
        "intensity": (parse_vec3, np.array([8.0, 8.0, 8.0])),
        "tau": (str, "cache"),            # cache | brute
        "cache_resolution": (int, 128),
        "brute_step": (float, 2e-3),
        "n1": (int, 64),
        "n2": (int, 128),
        "seed": (int, 0),
        "background": (parse_vec3, np.zeros(3)),
        "bbox": DEFAULT_BBOX_KEY,
        "png": (parse_bool, True),
    },
    "export-volume": {
        "checkpoints": (str, REQUIRED),
        "out": (str, REQUIRED),
        "dims": (parse_ivec3, (64, 64, 64)),
        "bbox": DEFAULT_BBOX_KEY,
    },
    "validate": {
        "seed": (int, 0),
    },
}


def _resolve_options(args):
    file_pairs = {}
    if args.config:
        try:
            file_pairs = read_config_file(args.config)
        except OSError as exc:
            raise IOFailure(str(exc))
    overrides = {}
    for item in args.options:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k] = v
    return resolve(args.command, SCHEMAS[args.command], file_pairs, overrides)


class IOFailure(Exception):
    pass


def cmd_gen_data(opt):
    try:
        scene = scenes.make_scene(opt["scene"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    try:
        scenes.generate_dataset(scene, opt["views"], opt["resolution"],
                                opt["layout"], opt["intensity"], opt["out"],
                                step=opt["step"], n_freqs=opt["w_freqs"],
                                radius=opt["radius"], write_png=opt["png"])
    except OSError as exc:
        raise IOFailure(f"writing dataset to {opt['out']}: {exc}")
    print(f"wrote {opt['views']} views to {opt['out']}")
    return 0


def cmd_train(opt):
    try:
        dataset = scenes.load_dataset(opt["dataset"])
    except (OSError, FileNotFoundError) as exc:
        raise IOFailure(str(exc))
    cfg = training.TrainConfig(
        learning_rate=opt["lr"], beta=opt["beta"], rays_per_batch=opt["rays"],
        iterations=opt["iters"], seed=opt["seed"], n_coarse=opt["n1"],
        n_fine=opt["n2"], tau_clamp=opt["tau_clamp"],
        checkpoint_every=opt["ckpt_every"], width=opt["width"],
        n_freqs=dataset.n_freqs)
    if opt["threads"] > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS"):
            os.environ[var] = str(opt["threads"])
    training.train(dataset, cfg, opt["out"], resume=opt["resume"])
    print(f"training finished; checkpoints in {opt['out']}")
    return 0


def _load_fields(ckpt_dir):
    try:
        coarse = load_checkpoint(os.path.join(ckpt_dir, "ckpt_coarse.bin"))
        fine = load_checkpoint(os.path.join(ckpt_dir, "ckpt_fine.bin"))
    except (OSError, FileNotFoundError) as exc:
        raise IOFailure(f"loading checkpoints from {ckpt_dir}: {exc}")
    return coarse, fine


def cmd_render(opt):
    coarse, fine = _load_fields(opt["checkpoints"])
    coarse_field = make_mlp_field(coarse)
    fine_field = make_mlp_field(fine)
    res = opt["resolution"]
    focal = (res / 2.0) / np.tan(np.radians(opt["fov"]) / 2.0)
    cam = Camera(opt["pos"], look_at(opt["pos"], opt["lookat"]), focal, res, res)
    bbox = (np.asarray(opt["bbox"][0]), np.asarray(opt["bbox"][1]))
    settings = raymarch.RenderSettings(opt["n1"], opt["n2"],
                                       tuple(opt["background"]), opt["seed"])

    light_pos = opt["light_pos"]
    if light_pos is None or np.allclose(light_pos, opt["pos"]):
        light = PointLight(np.asarray(opt["pos"], dtype=np.float64),
                           opt["intensity"])
        tau_fn = None
    else:
        light = PointLight(np.asarray(light_pos, dtype=np.float64),
                           opt["intensity"])
        if opt["tau"] == "cache":
            vol = lightcache.build_transmittance_volume(
                coarse_field, fine_field, light, bbox,
                resolution=opt["cache_resolution"], n_coarse=opt["n1"],
                n_fine=opt["n2"], rng=np.random.default_rng(opt["seed"]))
            tau_fn = lambda pts: lightcache.query_transmittance(vol, pts)
        elif opt["tau"] == "brute":
            density = lambda pts: fine_field(pts).sigma
            tau_fn = lambda pts: raymarch.brute_force_light_transmittance(
                pts, light, density, opt["brute_step"])
        else:
            raise ConfigError(f"tau must be 'cache' or 'brute', got {opt['tau']!r}")

    img = raymarch.render_image(cam, light, coarse_field, fine_field, settings,
                                bbox, tau_l_fn=tau_fn)
    try:
        pfm.write_pfm(opt["out"], img)
        if opt["png"]:
            pfm.write_png_preview(os.path.splitext(opt["out"])[0] + ".png", img)
    except OSError as exc:
        raise IOFailure(f"writing {opt['out']}: {exc}")
    print(f"rendered {res}x{res} image to {opt['out']}")
    return 0


def cmd_export_volume(opt):
    _, fine = _load_fields(opt["checkpoints"])
    grid = export.sample_volume(make_mlp_field(fine), opt["dims"],
                                (np.asarray(opt["bbox"][0]),
                                 np.asarray(opt["bbox"][1])))
    try:
        export.write_volume(opt["out"], grid)
    except OSError as exc:
        raise IOFailure(f"writing {opt['out']}: {exc}")
    print(f"exported {opt['dims']} volume to {opt['out']}")
    return 0


def cmd_validate(opt):
    ok = validate.run_validation(seed=opt["seed"])
    return 0 if ok else 2


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "render": cmd_render,
    "export-volume": cmd_export_volume,
    "validate": cmd_validate,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="reflectfield",
        description="Fit and re-render continuous reflectance fields.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"{name} subcommand")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("options", nargs="*", metavar="key=value",
                       help="config overrides, e.g. pos=0,0,3 fov=45")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        opt = _resolve_options(args)
        return COMMANDS[args.command](opt)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IOFailure as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except FloatingPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())
