"""Command line front end: ``cca run|sgm|eval|calibrate-histeq|synth``."""

import argparse
import json
import logging
from pathlib import Path
import sys

import numpy as np

from .config import PRESETS, load_config, parse_overrides
from .errors import ConfigError, DimensionError, InvariantViolation, ParameterError
from .evaluation import aggregate_reports, evaluate
from .io import DatasetEntry, load_image, read_dataset, read_pfm, save_preview, write_pfm
from .parabola import calibrate_histeq_offset, histeq_subpixel
from .pipeline import run_cca, run_sgm
from .synthetic import generate_synthetic_pair, layered_field, ramp_field, smooth_random_field

log = logging.getLogger("ccastereo")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2, 3


def _add_config_args(p):
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--config", type=Path, help="flat key = value file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override one config key (repeatable)")


def _add_input_args(p):
    p.add_argument("--left", type=Path)
    p.add_argument("--right", type=Path)
    p.add_argument("--gt", type=Path)
    p.add_argument("--gt-conf", type=Path)
    p.add_argument("--dataset", type=Path, help="list of 'id left right [gt [gt_conf]]' lines")
    p.add_argument("--id", default=None, help="output name for a single pair")
    p.add_argument("--out", type=Path, default=Path("out"))


def build_parser():
    ap = argparse.ArgumentParser(prog="cca", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, aliases, helptext in (("run", ["cca"], "CCA disparity"),
                                    ("sgm", [], "SGM baseline disparity")):
        p = sub.add_parser(name, aliases=aliases, help=helptext)
        _add_config_args(p)
        _add_input_args(p)

    p = sub.add_parser("eval", help="score estimates against ground truth")
    _add_config_args(p)
    _add_input_args(p)
    p.add_argument("--est", type=Path, help="estimate PFM (single entry)")
    p.add_argument("--est-dir", type=Path, help="folder of <id>.pfm estimates (dataset)")
    p.add_argument("--method", choices=("cca", "sgm"), default="cca",
                   help="compute the estimate when none is given")
    p.add_argument("--mask", type=Path, help="evaluation mask (non-zero = evaluate)")

    p = sub.add_parser("calibrate-histeq", help="estimate the histeq sub-pixel bias")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", default="SAD")
    p.add_argument("--window-std", type=float, default=3.0)
    p.add_argument("--inject-bias", type=float, default=0.0,
                   help="add this bias to the estimator (sanity check)")

    p = sub.add_parser("synth", help="write a synthetic pair with ground truth")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--shift", type=float, default=0.3, help="constant disparity")
    p.add_argument("--field", choices=("constant", "ramp", "smooth", "layered"),
                   default="constant")
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--blur", type=float, default=0.0, help="right-view blur std")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--texture", choices=("noise", "pink"), default="noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("synth"))
    return ap


def _config(args):
    return load_config(path=args.config, preset_name=args.preset,
                       overrides=parse_overrides(args.overrides))


def _entries(args):
    if args.dataset is not None:
        return read_dataset(args.dataset)
    if args.left is None or args.right is None:
        raise ParameterError("give --left and --right, or --dataset")
    name = args.id or args.left.stem
    return [DatasetEntry(name, args.left, args.right, args.gt, args.gt_conf).check()]


def _load_pair(entry):
    left, right = load_image(entry.left), load_image(entry.right)
    if left.shape != right.shape:
        raise DimensionError(f"{entry.identifier}: left {left.shape} vs right {right.shape}")
    return left, right


def _estimate(entry, config, method):
    left, right = _load_pair(entry)
    fn = run_cca if method == "cca" else run_sgm
    return fn(left, right, config)


def _write_disparity(out_dir, name, disp):
    out_dir.mkdir(parents=True, exist_ok=True)
    arr = disp.masked().astype(np.float32)
    write_pfm(out_dir / f"{name}.pfm", arr)
    save_preview(out_dir / f"{name}.png", arr)


def _report(entry, est, mask_path=None):
    gt = load_image(entry.gt)
    conf = load_image(entry.gt_conf) if entry.gt_conf is not None else None
    mask = load_image(mask_path) > 0 if mask_path is not None else None
    if gt.shape != est.shape:
        raise DimensionError(f"{entry.identifier}: estimate {est.shape} vs gt {gt.shape}")
    return evaluate(est, gt, conf, mask)


def _write_report(out_dir, name, report):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{name}_metrics.txt").write_text(report.to_text())
    (out_dir / f"{name}_metrics.json").write_text(report.to_json() + "\n")


def cmd_match(args, method):
    config = _config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "config.txt").write_text(config.to_text())
    reports = []
    for entry in _entries(args):
        disp = _estimate(entry, config, method)
        _write_disparity(args.out, entry.identifier, disp)
        log.info("%s: wrote %s.pfm", entry.identifier, entry.identifier)
        if entry.gt is not None:
            rep = _report(entry, disp)
            _write_report(args.out, entry.identifier, rep)
            reports.append(rep)
    if len(reports) > 1:
        _write_report(args.out, "dataset", aggregate_reports(reports))
    return EXIT_OK


def cmd_eval(args):
    config = _config(args)
    if args.est is not None and args.dataset is None and args.left is None:
        entries = [DatasetEntry(args.id or args.est.stem, None, None, args.gt,
                                args.gt_conf).check()]
    else:
        entries = _entries(args)
    reports = []
    for entry in entries:
        if entry.gt is None:
            raise ParameterError(f"{entry.identifier}: eval needs ground truth")
        if args.est is not None and len(entries) == 1:
            est = read_pfm(args.est).astype(np.float64)
        elif args.est_dir is not None:
            est = read_pfm(args.est_dir / f"{entry.identifier}.pfm").astype(np.float64)
        else:
            disp = _estimate(entry, config, args.method)
            _write_disparity(args.out, entry.identifier, disp)
            est = disp.masked()
        rep = _report(entry, est, args.mask)
        _write_report(args.out, entry.identifier, rep)
        print(f"[{entry.identifier}]")
        print(rep.to_text(), end="")
        reports.append(rep)
    agg = aggregate_reports(reports)
    _write_report(args.out, "dataset", agg)
    if len(reports) > 1:
        print("[dataset]")
        print(agg.to_text(), end="")
    return EXIT_OK


def cmd_calibrate(args):
    bias = args.inject_bias

    def estimator(c_m, c_0, c_p):
        return histeq_subpixel(c_m, c_0, c_p) + bias

    offset = calibrate_histeq_offset(args.seed, estimator, args.metric, args.window_std)
    print(f"histeq_offset = {offset:.6f}")
    return EXIT_OK


def _synth_field(args, rng):
    w, h = args.width, args.height
    if args.field == "constant":
        return args.shift
    if args.field == "ramp":
        return ramp_field(w, h, args.lo, args.hi)
    if args.field == "smooth":
        return smooth_random_field(w, h, rng, args.lo, args.hi)
    return layered_field(w, h, rng, np.linspace(args.lo, args.hi, 5))


def cmd_synth(args):
    rng = np.random.default_rng(args.seed)
    shift = _synth_field(args, rng)
    left, right, gt = generate_synthetic_pair(
        args.width, args.height, shift, args.blur if args.blur > 0 else None,
        args.seed, noise=args.noise, texture=args.texture)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, arr in (("left", left), ("right", right), ("gt", gt)):
        write_pfm(args.out / f"{name}.pfm", arr.astype(np.float32))
    print(f"wrote {args.out}/left.pfm right.pfm gt.pfm")
    return EXIT_OK


def dispatch(args):
    if args.command in ("run", "cca"):
        return cmd_match(args, "cca")
    if args.command == "sgm":
        return cmd_match(args, "sgm")
    if args.command == "eval":
        return cmd_eval(args)
    if args.command == "calibrate-histeq":
        return cmd_calibrate(args)
    return cmd_synth(args)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return dispatch(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
