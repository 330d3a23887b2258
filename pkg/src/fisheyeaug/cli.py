"""Command-line front end.

Subcommands: gen-testset (fixed-focal-length fisheye test sets),
augment (online-augmented sample dumps with provenance sidecars),
preview (per-DoF perturbation grid from one image), eval (per-focal
mIoU report), inspect (remap statistics and table dumps).

Every subcommand is bit-deterministic for identical flags and inputs;
--workers only changes wall time.  Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ._version import __version__
from . import dataset, metrics, policy as policy_mod, remap
from .errors import FisheyeAugError
from .geometry import FisheyeIntrinsics, PinholeIntrinsics, RigPose, WarpParams, max_incidence
from .policy import PRESET_NAMES, AugPolicy, load_policy, preset, sample_stream

logger = logging.getLogger(__name__)

DEFAULT_FOCALS = (200.0, 250.0, 300.0, 350.0, 400.0)
WORKERS_ENV = "FISHEYEAUG_WORKERS"

# Display colors for train IDs in preview label grids (Cityscapes palette).
LABEL_COLORS = np.zeros((256, 3), dtype=np.uint8)
LABEL_COLORS[:19] = [
    (128, 64, 128), (244, 35, 232), (70, 70, 70), (102, 102, 156),
    (190, 153, 153), (153, 153, 153), (250, 170, 30), (220, 220, 0),
    (107, 142, 35), (152, 251, 152), (70, 130, 180), (220, 20, 60),
    (255, 0, 0), (0, 0, 142), (0, 0, 70), (0, 60, 100), (0, 80, 100),
    (0, 0, 230), (119, 11, 32),
]


def preview_tile_specs(src_cols: int, src_rows: int, *, f_fixed: float = 300.0,
                       z1: float = 500.0, out_size: int = 640):
    """The 12 pose tiles + 4 focal-sweep tiles of the preview grid.

    Pose tiles perturb one DoF each at the fixed focal length; captions
    name the motion of the virtual fisheye rig.  Shift magnitudes are
    0.3 of the output width on x and z, 0.1 on y; rotations are 15 deg.
    """

    def params(f=f_fixed, **pose_kw):
        return WarpParams(
            fisheye=FisheyeIntrinsics(f, out_size, out_size),
            pinhole=PinholeIntrinsics(z1, src_cols, src_rows),
            pose=RigPose(**pose_kw),
        )

    pose_tiles = [
        ("moves left (X)", params(t_x=-0.3)),
        ("moves right (X)", params(t_x=0.3)),
        ("moves up (Y)", params(t_y=-0.1)),
        ("moves down (Y)", params(t_y=0.1)),
        ("moves forward (Z)", params(t_z=0.3)),
        ("moves back (Z)", params(t_z=-0.3)),
        ("turns left (Y)", params(rot_y=-15.0)),
        ("turns right (Y)", params(rot_y=15.0)),
        ("turns up (X)", params(rot_x=15.0)),
        ("turns down (X)", params(rot_x=-15.0)),
        ("rotates 15 deg (Z)", params(rot_z=15.0)),
        ("rotates -15 deg (Z)", params(rot_z=-15.0)),
    ]
    focal_tiles = [(f"f={f:g}", params(f=f)) for f in (200.0, 250.0, 300.0, 350.0)]
    return pose_tiles, focal_tiles


def render_preview_grid(img: np.ndarray, tiles, tile_size: int = 320,
                        caption_h: int = 18, columns: int = 4,
                        lbl: np.ndarray | None = None) -> Image.Image:
    """Warp the image once per tile and lay the results out in a grid."""
    rows_n = (len(tiles) + columns - 1) // columns
    cell_h = tile_size + caption_h
    grid = Image.new("RGB", (columns * tile_size, rows_n * cell_h), (32, 32, 32))
    draw = ImageDraw.Draw(grid)
    for k, (caption, params) in enumerate(tiles):
        table = remap.build_remap(params, params.pinhole.cols, params.pinhole.rows)
        if lbl is not None:
            warped = LABEL_COLORS[remap.apply_nearest(table, lbl, 255)]
        else:
            warped = remap.apply_bilinear(table, img, fill=(0, 0, 0))
        tile = Image.fromarray(warped).resize((tile_size, tile_size), Image.BILINEAR)
        cx = (k % columns) * tile_size
        cy = (k // columns) * cell_h
        grid.paste(tile, (cx, cy))
        draw.text((cx + 4, cy + tile_size + 3), caption, fill=(255, 255, 255))
    return grid


def _positive_workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def _parse_focals(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad focal list: {text!r}")


def _resolve_policy(args) -> tuple[AugPolicy, int, str]:
    """Policy + seed from --preset or --policy; --seed overrides the file's."""
    if args.policy is not None:
        pol, file_seed = load_policy(args.policy)
        origin = str(args.policy)
    else:
        pol, file_seed = preset(args.preset), 0
        origin = args.preset
    seed = args.seed if getattr(args, "seed", None) is not None else file_seed
    return pol, seed, origin


def cmd_gen_testset(args) -> int:
    manifest = dataset.scan_dataset(args.root, args.split)
    workers = _positive_workers(args)
    failures = 0
    for f in args.focals:
        out_dir = Path(args.out) / f"f{f:g}"
        result = dataset.generate_testset(
            manifest, f, out_dir, z1=args.z1, out_size=args.out_size,
            workers=workers,
        )
        failures += len(result.failures)
        print(f"f={f:g}: wrote {result.written} pairs to {out_dir} "
              f"(coverage {result.coverage:.4f})")
        for path, msg in result.failures:
            print(f"  FAILED {path}: {msg}", file=sys.stderr)
    return 1 if failures else 0


def cmd_augment(args) -> int:
    manifest = dataset.scan_dataset(args.root, args.split)
    pol, seed, origin = _resolve_policy(args)
    encoding = dataset.load_label_encoding()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    order = dataset.epoch_order(len(manifest), seed, epoch=0)

    def one(i: int) -> None:
        record = manifest.records[order[i % len(order)]]
        img = dataset.read_image(record.image_path)
        lbl = dataset.encode_labels(dataset.read_label(record.label_path), encoding)
        rng = sample_stream(seed, 0, i)
        d = policy_mod.sample_params(pol, rng, img.shape[1], img.shape[0])
        out_img, out_lbl = policy_mod.augment_with_decisions(img, lbl, d)
        stem = f"sample_{i:05d}"
        dataset.write_raster(out_img, out_dir / f"{stem}_image.png")
        dataset.write_raster(out_lbl, out_dir / f"{stem}_label.png")
        sidecar = {
            "index": i,
            "source_image": str(record.image_path),
            "policy": origin,
            "seed": seed,
            "epoch": 0,
            "generator": policy_mod.GENERATOR_NAME,
            "warp": {
                "f_fish": d.warp.fisheye.f_fish,
                "out_size": d.warp.fisheye.out_width,
                "z1": d.warp.pinhole.focal,
                **dataclasses.asdict(d.warp.pose),
            },
            "do_flip": d.do_flip,
            "crop_rect": list(d.crop_rect),
            "jitter_factors": list(d.jitter_factors),
        }
        tmp = out_dir / f"{stem}_params.json.tmp"
        tmp.write_text(json.dumps(sidecar, indent=2) + "\n")
        os.replace(tmp, out_dir / f"{stem}_params.json")

    workers = _positive_workers(args)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one, range(args.count)))
    else:
        for i in range(args.count):
            one(i)
    print(f"wrote {args.count} augmented pairs to {out_dir}")
    return 0


def cmd_preview(args) -> int:
    img = dataset.read_image(args.image)
    lbl = dataset.read_label(args.label) if args.label else None
    pose_tiles, focal_tiles = preview_tile_specs(
        img.shape[1], img.shape[0], z1=args.z1, out_size=args.out_size,
    )
    tiles = pose_tiles + focal_tiles
    grid = render_preview_grid(img, tiles, tile_size=args.tile_size)
    grid.save(args.out)
    print(f"wrote {len(pose_tiles)} pose tiles + {len(focal_tiles)} focal tiles "
          f"to {args.out}")
    if lbl is not None:
        lbl_out = Path(args.out).with_name(Path(args.out).stem + "_labels.png")
        render_preview_grid(img, tiles, tile_size=args.tile_size, lbl=lbl).save(lbl_out)
        print(f"wrote label grid to {lbl_out}")
    return 0


def cmd_eval(args) -> int:
    report = metrics.evaluate_testsets(args.pred, args.gt, args.focals)
    print(metrics.format_table(report))
    out = Path(args.report) if args.report else Path(args.pred) / "eval_report.json"
    out.write_text(report.to_json() + "\n")
    print(f"report written to {out}")
    return 0


def cmd_inspect(args) -> int:
    if args.policy is not None or args.preset is not None:
        pol, _, _ = _resolve_policy(args)
        mid = lambda r: (r.lo + r.hi) / 2.0
        params = WarpParams(
            fisheye=FisheyeIntrinsics(mid(pol.f_range), pol.out_size, pol.out_size),
            pinhole=PinholeIntrinsics(pol.z1, args.src_cols, args.src_rows),
            pose=RigPose(
                rot_x=mid(pol.rot_x_range), rot_y=mid(pol.rot_y_range),
                rot_z=mid(pol.rot_z_range), t_x=mid(pol.t_x_range),
                t_y=mid(pol.t_y_range), t_z=mid(pol.t_z_range),
            ),
        )
    else:
        params = WarpParams(
            fisheye=FisheyeIntrinsics(args.f, args.out_size, args.out_size),
            pinhole=PinholeIntrinsics(args.z1, args.src_cols, args.src_rows),
            pose=RigPose(rot_x=args.rot_x, rot_y=args.rot_y, rot_z=args.rot_z,
                         t_x=args.t_x, t_y=args.t_y, t_z=args.t_z),
        )
    table = remap.build_remap(params, params.pinhole.cols, params.pinhole.rows)
    cov = remap.coverage_ratio(table)
    print(f"f_fish        : {params.fisheye.f_fish:g} px")
    print(f"output size   : {params.fisheye.out_width}x{params.fisheye.out_height}")
    print(f"source size   : {params.pinhole.cols}x{params.pinhole.rows}")
    print(f"z1 / focal    : {params.pinhole.focal:g} px")
    print(f"theta_max     : {max_incidence(params):.4f} rad")
    print(f"coverage      : {cov:.6f}")
    if cov > 0:
        xs = table.src_x[table.valid]
        ys = table.src_y[table.valid]
        print(f"src x range   : [{xs.min():.2f}, {xs.max():.2f}]")
        print(f"src y range   : [{ys.min():.2f}, {ys.max():.2f}]")
    if args.dump_table:
        remap.save_table(table, args.dump_table)
        print(f"table written to {args.dump_table}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fisheyeaug",
        description="Synthesize fisheye urban-driving images and labels "
                    "from rectilinear datasets.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_workers(p):
        p.add_argument("--workers", type=int, default=None,
                       help=f"worker threads (default ${WORKERS_ENV} or 1)")

    p = sub.add_parser("gen-testset", help="generate fixed-focal fisheye test sets")
    p.add_argument("--root", required=True, help="Cityscapes-layout dataset root")
    p.add_argument("--split", default="val")
    p.add_argument("--f", dest="focals", type=_parse_focals,
                   default=list(DEFAULT_FOCALS),
                   help="comma-separated focal lengths (default 200,250,300,350,400)")
    p.add_argument("--out", required=True)
    p.add_argument("--out-size", type=int, default=640)
    p.add_argument("--z1", type=float, default=500.0)
    add_workers(p)
    p.set_defaults(func=cmd_gen_testset)

    p = sub.add_parser("augment", help="write online-augmented sample pairs")
    p.add_argument("--root", required=True)
    p.add_argument("--split", default="train")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=PRESET_NAMES)
    group.add_argument("--policy", help="policy file path")
    p.add_argument("--seed", type=int, default=None,
                   help="overrides the policy file's seed (default 0 for presets)")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--out", required=True)
    add_workers(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("preview", help="per-DoF perturbation grid from one image")
    p.add_argument("--image", required=True)
    p.add_argument("--label", default=None)
    p.add_argument("--preset", choices=PRESET_NAMES, default="base",
                   help="reserved for future per-policy previews")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--out-size", type=int, default=640)
    p.add_argument("--tile-size", type=int, default=320)
    p.add_argument("--z1", type=float, default=500.0)
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("eval", help="per-focal-length mIoU report")
    p.add_argument("--pred", required=True, help="prediction root (f<N> subdirs)")
    p.add_argument("--gt", required=True, help="ground-truth root (f<N> subdirs)")
    p.add_argument("--f", dest="focals", type=_parse_focals,
                   default=list(DEFAULT_FOCALS))
    p.add_argument("--report", default=None, help="JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="remap statistics for given parameters")
    p.add_argument("--policy", default=None)
    p.add_argument("--preset", choices=PRESET_NAMES, default=None)
    p.add_argument("--f", type=float, default=300.0)
    p.add_argument("--rot-x", type=float, default=0.0)
    p.add_argument("--rot-y", type=float, default=0.0)
    p.add_argument("--rot-z", type=float, default=0.0)
    p.add_argument("--t-x", type=float, default=0.0)
    p.add_argument("--t-y", type=float, default=0.0)
    p.add_argument("--t-z", type=float, default=0.0)
    p.add_argument("--out-size", type=int, default=640)
    p.add_argument("--z1", type=float, default=500.0)
    p.add_argument("--src-cols", type=int, default=2048)
    p.add_argument("--src-rows", type=int, default=1024)
    p.add_argument("--dump-table", default=None, help="write the FRMP table here")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    for attr in ("root", "image"):
        value = getattr(args, attr, None)
        if value is not None and not Path(value).exists():
            parser.error(f"--{attr} path does not exist: {value}")
    try:
        return args.func(args)
    except FisheyeAugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
