"""Command-line surface tying the library into runnable experiments.

Subcommands:

    splat            render a scene file into probability + label grids
    eval             masked IoU / mIoU between two label grids
    init-from-depth  depth map -> initial primitive scene file
    demo-floater     outlier-collapse report at the floater point
    gca-bench        attention timing sweep and fitted complexity slope
    bench-splat      splat latency / memory benchmark

All results go to stdout as `key=value` lines; diagnostics go to stderr
and failures exit nonzero.  Heavy imports happen inside the handlers so
the light commands stay fast.
"""

from __future__ import annotations

import argparse
import sys

from .errors import SplatVoxError


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected INTxINT[...], got {text!r}")
    if any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"dims must be positive, got {text!r}")
    return dims


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return lo, hi


def _parse_sweep(text: str) -> list[int]:
    """'1024..65536' -> doubling sweep; a single integer is a one-point sweep."""
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split(".."))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO..HI, got {text!r}")
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad sweep bounds {text!r}")
    values = []
    n = lo
    while n <= hi:
        values.append(n)
        n *= 2
    return values


def _parse_intrinsics(text: str):
    try:
        fx, fy, cx, cy = (float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected fx,fy,cx,cy, got {text!r}")
    return fx, fy, cx, cy


def _emit(lines) -> None:
    for line in lines:
        print(line)


def _cmd_splat(args) -> int:
    import numpy as np

    from .aggregate import argmax_labels, splat
    from .grids import VoxelGridSpec
    from .sceneio import load_scene, save_label_grid, save_prob_grid
    from .spatial import build_index

    scene = load_scene(args.scene)
    if len(args.grid_dims) != 3:
        raise SplatVoxError(f"--grid-dims needs XxYxZ, got {args.grid_dims}")
    spec = VoxelGridSpec(VoxelGridSpec().origin, args.voxel_size, args.grid_dims)
    index = build_index(scene, kappa=args.kappa)
    grid = splat(scene, spec, args.mode, index, threads=args.threads)
    labels = argmax_labels(grid)

    save_prob_grid(grid, args.out)
    label_path = _label_path(args.out)
    save_label_grid(labels, label_path)
    _emit([
        f"scene={args.scene}",
        f"mode={args.mode}",
        f"voxels={spec.num_voxels}",
        f"occupied_voxels={int(np.count_nonzero(labels.labels))}",
        f"prob_grid={args.out}",
        f"label_grid={label_path}",
    ])
    return 0


def _label_path(out: str) -> str:
    return (out[:-5] if out.endswith(".sscg") else out) + ".labels.sscg"


def _cmd_eval(args) -> int:
    import numpy as np

    from .metrics import iou_miou
    from .sceneio import load_grid, load_label_grid

    pred = load_label_grid(args.pred)
    gt = load_label_grid(args.gt)
    if args.mask is not None:
        mask_arr, _, _, _ = load_grid(args.mask)
        mask = mask_arr[..., 0] != 0
    else:
        mask = None
    result = iou_miou(pred, gt, mask)
    lines = [f"iou={result.iou!r}", f"miou={result.miou!r}"]
    for c, value in enumerate(result.per_class, start=1):
        lines.append(f"per_class_iou_{c}={'nan' if np.isnan(value) else repr(float(value))}")
    _emit(lines)
    return 0


def _cmd_init_from_depth(args) -> int:
    from .depth import CameraIntrinsics, backproject, init_gaussians, make_reference_grid
    from .grids import VoxelGridSpec
    from .sceneio import load_depth_map, save_scene

    depth = load_depth_map(args.depth)
    fx, fy, cx, cy = args.intrinsics
    intr = CameraIntrinsics(fx, fy, cx, cy, width=depth.shape[1], height=depth.shape[0])
    if len(args.grid) != 2:
        raise SplatVoxError(f"--grid needs HxW, got {args.grid}")
    ref = make_reference_grid(*args.grid)
    points, valid = backproject(depth, intr, ref)
    scene = init_gaussians(points[valid], VoxelGridSpec(), num_classes=args.classes,
                           scale_range=args.scale_range, seed=args.seed)
    save_scene(scene, args.out)
    _emit([
        f"reference_points={ref.shape[0]}",
        f"valid_points={int(valid.sum())}",
        f"primitives={len(scene)}",
        f"scene={args.out}",
    ])
    return 0


def _cmd_demo_floater(args) -> int:
    from .aggregate import floater_experiment

    report = floater_experiment(args.cluster, args.opacity)
    _emit(report.as_lines())
    return 0


def _cmd_gca_bench(args) -> int:
    from .attention import complexity_bench

    result = complexity_bench(args.n, args.d, args.l, args.g, repeats=args.repeats)
    _emit(result.as_lines())
    return 0


def _cmd_bench_splat(args) -> int:
    import resource
    import statistics
    import time

    from .aggregate import splat
    from .grids import VoxelGridSpec
    from .sceneio import load_scene
    from .spatial import build_index

    scene = load_scene(args.scene)
    spec = VoxelGridSpec()
    index = build_index(scene, kappa=args.kappa)

    splat(scene, spec, args.mode, index, threads=args.threads)  # warmup + JIT
    times = []
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        splat(scene, spec, args.mode, index, threads=args.threads)
        times.append(time.perf_counter() - t0)

    stdev = statistics.stdev(times) if len(times) > 1 else 0.0
    peak_rss_mib = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
    _emit([
        f"scene={args.scene}",
        f"mode={args.mode}",
        f"primitives={len(scene)}",
        f"voxels={spec.num_voxels}",
        f"threads={args.threads}",
        f"repeat={args.repeat}",
        f"mean_s={statistics.mean(times)!r}",
        f"stdev_s={stdev!r}",
        f"min_s={min(times)!r}",
        f"peak_rss_mib={peak_rss_mib!r}",
    ])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splatvox",
        description="Gaussian-to-voxel semantic splatting experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("splat", help="render a scene into probability and label grids")
    p.add_argument("--scene", required=True)
    p.add_argument("--grid-dims", type=_parse_dims, default=(60, 60, 36))
    p.add_argument("--voxel-size", type=float, default=0.08)
    p.add_argument("--mode", choices=("pgs", "dga"), required=True)
    p.add_argument("--kappa", type=float, default=3.0)
    p.add_argument("--threads", type=int, default=0, help="0 = auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_splat)

    p = sub.add_parser("eval", help="IoU / mIoU between two label grids")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--mask", default=None, help="u8 grid; nonzero marks in-frustum voxels")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("init-from-depth", help="initialize primitives from a depth map")
    p.add_argument("--depth", required=True)
    p.add_argument("--intrinsics", type=_parse_intrinsics, required=True,
                   metavar="FX,FY,CX,CY")
    p.add_argument("--grid", type=_parse_dims, default=(30, 40), metavar="HxW")
    p.add_argument("--scale-range", type=_parse_range, default=(0.01, 0.16),
                   metavar="LO:HI")
    p.add_argument("--classes", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_init_from_depth)

    p = sub.add_parser("demo-floater", help="outlier-collapse report at the floater point")
    p.add_argument("--opacity", type=float, default=0.01)
    p.add_argument("--cluster", type=int, default=50)
    p.set_defaults(func=_cmd_demo_floater)

    p = sub.add_parser("gca-bench", help="attention cost sweep over point counts")
    p.add_argument("--n", type=_parse_sweep, default=_parse_sweep("1024..65536"),
                   metavar="LO..HI")
    p.add_argument("--d", type=int, default=96)
    p.add_argument("--l", type=int, default=4)
    p.add_argument("--g", type=int, default=4)
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=_cmd_gca_bench)

    p = sub.add_parser("bench-splat", help="splat latency and memory benchmark")
    p.add_argument("--scene", required=True)
    p.add_argument("--mode", choices=("pgs", "dga"), required=True)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--kappa", type=float, default=3.0)
    p.add_argument("--threads", type=int, default=0, help="0 = auto")
    p.set_defaults(func=_cmd_bench_splat)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SplatVoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
