"""``betarep`` command line.

Exit codes: 0 success, 1 usage or input error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from ._backend import kernels
from .codec import render_mask
from .config import ConfigError, ToolkitConfig, load_config
from .core import BetaPedestrian, ClampCounter, boxes_to_beta
from .dataio import (
    DetectionFormatError,
    ParseError,
    iter_odgt,
    read_detections,
    read_odgt,
    write_detections,
    write_odgt,
    write_pair_records,
)
from .divergence import GridSpec
from .evaluation import UndefinedMetricError, evaluate, pair_statistics
from .nms import PRESETS, STRATEGIES, greedy_nms, id_key, preset
from .synth import SynthConfig, SynthError, synth_scenes

log = logging.getLogger("betarep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _effective(args) -> ToolkitConfig:
    cfg = load_config(args.config)
    grid = cfg.grid
    if getattr(args, "grid", None) is not None:
        try:
            grid = GridSpec(args.grid, cfg.grid.epsilon_floor)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    threads = args.threads if getattr(args, "threads", None) is not None else cfg.threads
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    return replace(cfg, grid=grid, nms=replace(cfg.nms, grid=grid), threads=threads)


def cmd_convert(args) -> int:
    cfg = _effective(args)
    counter = ClampCounter()
    out, close = _open_out(args.out)
    n = 0
    try:
        with open(args.annotations, encoding="utf-8") as fh:
            for scene in iter_odgt(fh):
                for k, person in enumerate(scene.persons):
                    bp = boxes_to_beta(person.paired, cfg.weights, counter)
                    rec = {
                        "image": scene.image_id,
                        "index": k,
                        "ignore": person.ignore,
                        "beta": bp.as_array().tolist(),
                    }
                    out.write(json.dumps(rec) + "\n")
                    n += 1
    finally:
        if close:
            out.close()
    clamped, total = counter.snapshot()
    summary = {"persons": n, "axes": total, "clamped_axes": clamped, "config": cfg.as_dict()}
    print(json.dumps(summary), file=sys.stderr)
    return 0


def _nms_config(args, cfg: ToolkitConfig):
    if args.preset and args.strategy:
        raise UsageError("give either --preset or --strategy, not both")
    base = cfg.nms_config()
    if args.preset:
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
        base = preset(args.preset, grid=cfg.grid, weights=cfg.weights)
    overrides = {}
    if args.strategy:
        if args.strategy not in STRATEGIES:
            raise UsageError(f"unknown strategy {args.strategy!r}; choose from {list(STRATEGIES)}")
        overrides["strategy"] = args.strategy
    if args.kl_threshold is not None:
        overrides["kl_threshold"] = args.kl_threshold
    if args.iou_threshold is not None:
        overrides["iou_threshold"] = args.iou_threshold
    if args.viou_threshold is not None:
        overrides["viou_threshold"] = args.viou_threshold
    try:
        return replace(base, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_nms(args) -> int:
    cfg = _effective(args)
    ncfg = _nms_config(args, cfg)
    by_image = defaultdict(list)
    for image, det in read_detections(args.detections):
        by_image[image].append(det)
    images = sorted(by_image)

    def run(image):
        t0 = time.perf_counter()
        kept = greedy_nms(by_image[image], ncfg)
        return kept, time.perf_counter() - t0

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run, images))
    else:
        results = [run(im) for im in images]

    items = []
    for image, (kept, _) in zip(images, results):
        kept = sorted(kept, key=lambda d: (-d.score, id_key(d.id)))
        items.extend((image, d) for d in kept)
    if args.out in (None, "-"):
        from .dataio import detection_record

        for image, d in items:
            sys.stdout.write(json.dumps(detection_record(image, d)) + "\n")
    else:
        write_detections(args.out, items)

    times = np.array([t for _, t in results]) if results else np.zeros(0)
    report = {
        "images": len(images),
        "input": sum(len(v) for v in by_image.values()),
        "kept": len(items),
        "seconds_total": float(times.sum()),
        "seconds_mean": float(times.mean()) if times.size else 0.0,
        "seconds_max": float(times.max()) if times.size else 0.0,
        "kernels": kernels.NAME,
        "nms": {k: v for k, v in vars(ncfg).items() if k not in ("grid", "weights")},
        "config": cfg.as_dict(),
    }
    print(json.dumps(report), file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    cfg = _effective(args)
    scenes = read_odgt(args.annotations)
    by_image = defaultdict(list)
    for image, det in read_detections(args.detections):
        by_image[image].append(det)
    report = evaluate(by_image, scenes, cfg.metrics.match_iou)
    report["config"] = cfg.as_dict()
    out, close = _open_out(args.out)
    try:
        out.write(json.dumps(report, indent=2) + "\n")
    finally:
        if close:
            out.close()
    return 0


def cmd_compare(args) -> int:
    cfg = _effective(args)
    thresholds = args.kl_threshold or list(cfg.metrics.kl_thresholds)
    scenes = read_odgt(args.annotations)
    records, summary = pair_statistics(
        scenes,
        cfg.weights,
        cfg.grid,
        kl_thresholds=thresholds,
        iou_threshold=cfg.nms.iou_threshold if args.iou_threshold is None else args.iou_threshold,
        viou_threshold=cfg.nms.viou_threshold,
        threads=cfg.threads,
    )
    out, close = _open_out(args.out)
    try:
        write_pair_records(out, records)
    finally:
        if close:
            out.close()
    report = {**summary.as_dict(), "config": cfg.as_dict()}
    print(json.dumps(report), file=sys.stdout if close else sys.stderr)
    return 0


def write_pgm(path, mask: np.ndarray) -> None:
    """Binary greyscale image, brightest cell at 255."""
    peak = mask.max()
    img = np.rint(255.0 * mask / peak).astype(np.uint8) if peak > 0 else np.zeros(mask.shape, np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def cmd_render_mask(args) -> int:
    _effective(args)
    try:
        bp = BetaPedestrian.from_array(args.beta)
    except ValueError as exc:
        raise UsageError(f"invalid --beta: {exc}") from exc
    if args.height < 1 or args.width < 1:
        raise UsageError("--height and --width must be >= 1")
    mask = render_mask(bp, args.height, args.width)
    prefix = args.out or "mask"
    write_pgm(prefix + ".pgm", mask)
    np.savetxt(prefix + ".csv", mask, delimiter=",", fmt="%.17g")
    print(json.dumps({"pgm": prefix + ".pgm", "csv": prefix + ".csv", "sum": float(mask.sum())}))
    return 0


def cmd_synth(args) -> int:
    try:
        scfg = SynthConfig(
            seed=args.seed,
            n_scenes=args.scenes,
            persons=tuple(args.persons),
            overlap=args.overlap,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    scenes = synth_scenes(scfg)
    if args.out in (None, "-"):
        from .dataio import serialize_odgt

        for s in scenes:
            sys.stdout.write(serialize_odgt(s) + "\n")
    else:
        write_odgt(args.out, scenes)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="betarep", description="Beta Representation toolkit for occluded pedestrians")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (falls back to $BETAREP_CONFIG)")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--grid", type=int, default=None, help="grid cells per axis for KL")
    common.add_argument("--out", default=None, help="output path ('-' for stdout)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("convert", parents=[common], help="odgt annotations to Beta Representation records")
    s.add_argument("annotations")
    s.set_defaults(func=cmd_convert)

    s = sub.add_parser("nms", parents=[common], help="suppress duplicate detections")
    s.add_argument("detections")
    s.add_argument("--strategy", default=None)
    s.add_argument("--preset", default=None, help=f"one of {sorted(PRESETS)}")
    s.add_argument("--kl-threshold", type=float, default=None)
    s.add_argument("--iou-threshold", type=float, default=None)
    s.add_argument("--viou-threshold", type=float, default=None)
    s.set_defaults(func=cmd_nms)

    s = sub.add_parser("eval", parents=[common], help="AP and MR^-2 of detections against annotations")
    s.add_argument("detections")
    s.add_argument("annotations")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("compare", parents=[common], help="KL vs IoU statistics over overlapping GT pairs")
    s.add_argument("annotations")
    s.add_argument("--kl-threshold", type=float, action="append", default=None)
    s.add_argument("--iou-threshold", type=float, default=None)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("render-mask", parents=[common], help="render a beta mask as PGM and CSV")
    s.add_argument("--beta", type=float, nargs=8, required=True, metavar="V",
                   help="l t r b alpha_x beta_x alpha_y beta_y")
    s.add_argument("--height", type=int, default=7)
    s.add_argument("--width", type=int, default=7)
    s.set_defaults(func=cmd_render_mask)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic crowd odgt file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scenes", type=int, default=10)
    s.add_argument("--persons", type=int, nargs=2, default=[2, 6], metavar=("MIN", "MAX"))
    s.add_argument("--overlap", type=float, default=0.5)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, ParseError, DetectionFormatError, SynthError, UndefinedMetricError) as exc:
        print(f"betarep: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"betarep: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # invariant violations and bugs
        print(f"betarep: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
