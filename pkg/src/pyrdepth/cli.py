"""Command-line interface: inference, evaluation, benchmarking, verification.

Report-producing commands (eval, bench) write a matplotlib figure next to
the CSV they emit. All randomness flows from explicit seeds; outputs are
byte-deterministic for fixed inputs and flags.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import max_threads
from .bench import run_benchmark, write_bench_csv
from .figures import save_bench_figure, save_disparity_preview, save_eval_figure
from .metrics import (CSV_HEADER, CameraModel, compute_metrics,
                      disparity_to_depth, eval_crop_mask, mean_metrics)
from .network import (NetworkConfig, build, count_parameters, infer_fullres,
                      parse_exit_level)
from .raster import read_image_rgb, read_raster_16, write_disparity_raster
from .tensor import bilinear_resize
from .verify import run_battery
from .weights import load, random_init, save

# Default processing resolution: the architecture's native training/eval
# size (width x height = 512 x 256), applied when --resize is passed.
RESIZE_H = 256
RESIZE_W = 512

PARAM_BAND = (1_800_000, 2_050_000)


def _load_network(weights_path, config=None):
    container = load(weights_path)
    return build(config or NetworkConfig(), container)


def _figure_path(csv_path):
    stem, _ = os.path.splitext(csv_path)
    return stem + ".png"


def cmd_infer(args):
    net = _load_network(args.weights)
    image = read_image_rgb(args.input)
    h, w = image.shape[2:]
    div = 1 << net.levels
    if args.resize:
        image = bilinear_resize(image, RESIZE_H, RESIZE_W)
    elif h % div or w % div:
        raise ValueError(
            f"input is {h}x{w}, not divisible by {div}; pass --resize to "
            f"process at {RESIZE_H}x{RESIZE_W}")
    exit_level = parse_exit_level(args.exit)
    disp = infer_fullres(net, image, exit_level)[0, 0]
    write_disparity_raster(disp, args.out)
    if args.preview:
        max_disp = net.config.disparity_scale * image.shape[3]
        save_disparity_preview(disp, args.preview, max_disp)
    print(f"wrote {args.out} ({disp.shape[1]}x{disp.shape[0]}, "
          f"exit {exit_level.name})")
    return 0


def _eval_one(stem, pred_path, gt_path, cam, cap, use_crop, min_depth):
    pred = read_raster_16(pred_path)
    gt = read_raster_16(gt_path)
    if pred.shape != gt.shape:
        # disparity scales with width when resampled to the gt grid
        scale = gt.shape[1] / pred.shape[1] if cam is not None else 1.0
        pred = bilinear_resize(pred[None, None], *gt.shape)[0, 0] * scale
    if cam is not None:
        pred = disparity_to_depth(pred, cam)
    mask = gt > 0
    if use_crop:
        mask &= eval_crop_mask(*gt.shape)
    pred = np.clip(pred, min_depth, cap)
    gt = np.clip(gt, min_depth, cap)
    return stem, compute_metrics(pred, gt, mask, cap)


def cmd_eval(args):
    preds = {os.path.splitext(f)[0]: os.path.join(args.pred, f)
             for f in os.listdir(args.pred)}
    gts = {os.path.splitext(f)[0]: os.path.join(args.gt, f)
           for f in os.listdir(args.gt)}
    stems = sorted(set(preds) & set(gts))
    for stem in sorted(set(preds) ^ set(gts)):
        print(f"skipped (unmatched): {stem}", file=sys.stderr)
    if not stems:
        raise ValueError(f"no matching filename pairs between {args.pred} "
                         f"and {args.gt}")

    if (args.focal is None) != (args.baseline is None):
        raise ValueError("--focal and --baseline must be given together")
    cam = None
    if args.focal is not None:
        cam = CameraModel(focal_px=args.focal, baseline_m=args.baseline,
                          min_depth_m=args.min_depth, max_depth_m=args.cap)

    jobs = [(stem, preds[stem], gts[stem], cam, args.cap,
             args.crop == "eigen", args.min_depth) for stem in stems]
    with ThreadPoolExecutor(max_workers=max_threads()) as pool:
        results = list(pool.map(lambda j: _eval_one(*j), jobs))
    results.sort(key=lambda r: r[0])

    per_image = [m for _, m in results]
    aggregate = mean_metrics(per_image)
    lines = [f"name,{CSV_HEADER}"]
    lines += [f"{stem},{m.as_csv_row()}" for stem, m in results]
    lines.append(f"mean,{aggregate.as_csv_row()}")
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    save_eval_figure([s for s, _ in results], per_image, aggregate,
                     _figure_path(args.out))
    print(f"evaluated {len(results)} pairs -> {args.out}")
    print(f"mean,{aggregate.as_csv_row()}")
    return 0


def cmd_bench(args):
    net = _load_network(args.weights)
    try:
        h, w = (int(v) for v in args.dims.lower().split("x"))
    except ValueError:
        raise ValueError(f"--dims must look like 256x512, got {args.dims!r}")
    levels = [parse_exit_level(t) for t in args.levels.split(",") if t]
    if not levels:
        raise ValueError("--levels must name at least one exit level")
    rng = np.random.default_rng(args.seed)
    image = rng.uniform(0.0, 1.0, size=(1, 3, h, w)).astype(np.float32)
    records = run_benchmark(net, image, levels, args.reps)
    write_bench_csv(records, args.out)
    save_bench_figure(records, _figure_path(args.out))
    for r in records:
        print(r.as_csv_row())
    print(f"wrote {args.out}")
    return 0


def cmd_verify_loss(args):
    ok, _ = run_battery(seed=args.seed)
    return 0 if ok else 1


def cmd_init_weights(args):
    config = NetworkConfig()
    container = random_init(config, args.seed)
    net = build(config, container)
    count = count_parameters(net)
    save(container, args.out)
    print(f"wrote {args.out}: {len(container)} tensors, {count} parameters")
    if not PARAM_BAND[0] <= count <= PARAM_BAND[1]:
        print(f"parameter count {count} outside expected band "
              f"{PARAM_BAND}", file=sys.stderr)
        return 1
    return 0


def cmd_inspect(args):
    container = load(args.weights)
    for name in container.names():
        dims = "x".join(str(d) for d in container.get(name).shape)
        print(f"{name}  {dims}")
    print(f"entries: {len(container)}")
    print(f"parameters: {container.param_count()}")
    try:
        build(NetworkConfig(), container)
        print("build(default config): ok")
    except (KeyError, ValueError) as exc:
        print(f"build(default config): FAILED: {exc}")
        if args.check_build:
            return 1
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="pyrdepth",
        description="CPU pyramidal depth inference, evaluation and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="run the network on one image")
    p.add_argument("--weights", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--exit", default="h",
                   choices=["h", "q", "e", "s16", "s32", "s64"])
    p.add_argument("--out", required=True)
    p.add_argument("--resize", action="store_true",
                   help=f"bilinearly resize input to {RESIZE_W}x{RESIZE_H}")
    p.add_argument("--preview", default=None,
                   help="also write a colormapped preview PNG here")
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("eval", help="evaluate prediction rasters against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--focal", type=float, default=None,
                   help="focal length in pixels; with --baseline, predictions "
                        "are disparities to convert")
    p.add_argument("--baseline", type=float, default=None,
                   help="stereo baseline in meters")
    p.add_argument("--cap", type=float, default=80.0,
                   help="depth cap in meters (80 or 50)")
    p.add_argument("--crop", default="eigen", choices=["eigen", "none"])
    p.add_argument("--min-depth", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("bench", help="time inference at several exit levels")
    p.add_argument("--weights", required=True)
    p.add_argument("--dims", default="256x512", help="input HxW")
    p.add_argument("--levels", default="h,q,e")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("verify-loss", help="run the loss verification battery")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_verify_loss)

    p = sub.add_parser("init-weights", help="write seeded random weights")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_init_weights)

    p = sub.add_parser("inspect", help="list tensors in a weight file")
    p.add_argument("--weights", required=True)
    p.add_argument("--check-build", action="store_true",
                   help="exit nonzero if the default config cannot bind")
    p.set_defaults(fn=cmd_inspect)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
