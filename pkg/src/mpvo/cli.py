"""Command-line entry point: ``mpvo {generate,estimate,benchmark,compare,mask}``.

Exit status is 0 on success, 1 for usage or configuration problems and 2
for unreadable or malformed data files.  Angles are degrees on the command
line and in every written artifact.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import bench, io
from .baselines import EstimatorKind
from .errors import ConfigParse, EmptyCorrespondences, FileFormat, MpvoError
from .gcpe import PriorDistribution, estimate_relative_pose
from .geometry import CameraIntrinsics, DepthMap, Pose2D
from .masks import overlap_mask
from .metrics import CSV_COLUMNS, MetricsReport, format_csv
from .sim import EstimatorSpec, episode_to_jsonl, estimate_motion

log = logging.getLogger("mpvo")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; we reserve 2 for data errors
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def parse_prior(text: str) -> Pose2D:
    """``"dx,dy,dtheta_deg"`` to a pose."""
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("prior must be 'dx,dy,dtheta_deg'")
    try:
        dx, dy, deg = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad prior {text!r}: {exc}") from exc
    if not all(math.isfinite(v) for v in (dx, dy, deg)):
        raise argparse.ArgumentTypeError("prior values must be finite")
    return Pose2D.from_degrees(dx, dy, deg)


def _estimator_kind(text: str) -> EstimatorKind:
    try:
        return EstimatorKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _load(args) -> bench.BenchmarkConfig:
    cfg = bench.load_config(args.config) if args.config else bench.BenchmarkConfig()
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)
    if args.out_dir is not None:
        cfg = replace(cfg, out_dir=args.out_dir)
    if getattr(args, "estimator", None):
        cfg = replace(cfg, estimators=tuple(EstimatorSpec(k) for k in args.estimator))
    return cfg


def _out_dir(cfg: bench.BenchmarkConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    cfg = _load(args)
    out = _out_dir(cfg)
    world = bench.make_world(cfg)
    specs = bench.make_episodes(cfg, world)
    (out / "world.json").write_text(json.dumps(world.to_json()) + "\n")
    with open(out / "episodes.jsonl", "w") as fh:
        for s in specs:
            fh.write(json.dumps(s.to_json()) + "\n")
    print(f"wrote {out / 'world.json'} ({len(world.landmarks)} landmarks) "
          f"and {out / 'episodes.jsonl'} ({len(specs)} episodes)")
    return EXIT_OK


def cmd_estimate(args) -> int:
    corrs = io.read_correspondences(args.correspondences, args.top_m)
    est = EstimatorSpec(args.estimator)
    if est.kind == EstimatorKind.GT_ORACLE:
        raise _UsageError("the ground-truth oracle needs a simulator; pick another estimator")
    if len(corrs) == 0:
        raise EmptyCorrespondences(f"{args.correspondences}: no correspondences")
    result: dict = {"estimator": est.name, "n_correspondences": len(corrs)}
    if est.kind == EstimatorKind.GCPE:
        prior = PriorDistribution(args.prior, est.sigma_x, est.sigma_y, math.radians(est.sigma_theta_deg))
        res = estimate_relative_pose(corrs, prior, replace(est.gcpe, rng_seed=args.seed))
        pose = res.pose
        result.update(iterations=res.iterations, score=res.final_score)
    else:
        pose = estimate_motion(est, corrs, args.prior, args.prior, args.seed)
    result.update(dx=pose.dx, dy=pose.dy, dtheta_deg=math.degrees(pose.dtheta))
    print(f"{pose.dx:.6f} {pose.dy:.6f} {math.degrees(pose.dtheta):.6f}")
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def _run(args):
    cfg = _load(args)
    out = _out_dir(cfg)
    results = bench.run_benchmark(cfg, jobs=args.jobs)
    rows = [(est.name, report) for est, _, report in results]
    (out / "metrics.csv").write_text(format_csv(rows))
    with open(out / "episodes.jsonl", "w") as fh:
        for _, records, _ in results:
            for r in records:
                fh.write(episode_to_jsonl(r))
    return cfg, out, rows


def cmd_benchmark(args) -> int:
    _, out, _ = _run(args)
    sys.stdout.write((out / "metrics.csv").read_text())
    return EXIT_OK


def delta_table(rows: list[tuple[str, MetricsReport]]) -> str:
    """CSV of each row minus the first (reference) row, column by column."""
    ref_name, ref = rows[0]
    lines = [",".join(("Method", "Reference") + tuple(f"d_{c}" for c in CSV_COLUMNS))]
    for name, rep in rows[1:]:
        deltas = [f"{a - b:+.2f}" for a, b in zip(rep.row(), ref.row())]
        lines.append(",".join([name, ref_name] + deltas))
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    _, out, rows = _run(args)
    table = delta_table(rows)
    (out / "compare.csv").write_text(table)
    sys.stdout.write((out / "metrics.csv").read_text())
    sys.stdout.write("\n" + table)
    return EXIT_OK


def cmd_mask(args) -> int:
    raw = io.read_depth_pgm(args.depth)
    h, w = raw.shape
    if args.fx is not None:
        fy = args.fy if args.fy is not None else args.fx
        cx = args.cx if args.cx is not None else (w - 1) / 2.0
        cy = args.cy if args.cy is not None else (h - 1) / 2.0
        k = CameraIntrinsics(args.fx, fy, cx, cy, w, h)
    else:
        k = CameraIntrinsics.from_hfov(w, h, args.hfov)
    depth = DepthMap(raw, args.min_depth, args.max_depth)
    mask = overlap_mask(depth, args.prior, k)
    io.write_pgm(args.output, mask.to_u8())
    print(f"{mask.count()} of {w * h} pixels in overlap")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mpvo", description="Motion-prior relative pose estimation and benchmarking.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, with_estimator_list=False):
        sp.add_argument("--config", help="benchmark config JSON (defaults apply when omitted)")
        sp.add_argument("--seed", type=int, help="override the config's base seed")
        sp.add_argument("--out-dir", help="output directory (overrides the config)")
        if with_estimator_list:
            sp.add_argument("--estimator", type=_estimator_kind, action="append",
                            help="run only this estimator with default parameters (repeatable)")

    g = sub.add_parser("generate", help="write world.json and episodes.jsonl")
    common(g)
    g.set_defaults(func=cmd_generate)

    for name, func, text in (("benchmark", cmd_benchmark, "run every estimator and write metrics.csv"),
                             ("compare", cmd_compare, "benchmark plus a delta table against the first estimator")):
        b = sub.add_parser(name, help=text)
        common(b, with_estimator_list=True)
        b.add_argument("--jobs", type=int, default=1, help="worker processes for episodes")
        b.set_defaults(func=func)

    e = sub.add_parser("estimate", help="estimate one relative pose from a correspondence file")
    e.add_argument("correspondences", help="JSONL with pa, pb, confidence per line")
    e.add_argument("--prior", type=parse_prior, default=Pose2D.identity(), help="dx,dy,dtheta_deg")
    e.add_argument("--estimator", type=_estimator_kind, default=EstimatorKind.GCPE)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--top-m", type=int, default=None, help="keep the m most confident pairs")
    e.set_defaults(func=cmd_estimate)

    m = sub.add_parser("mask", help="overlap mask from a 16-bit millimetre depth PGM")
    m.add_argument("depth")
    m.add_argument("output")
    m.add_argument("--prior", type=parse_prior, default=Pose2D.identity(), help="dx,dy,dtheta_deg")
    m.add_argument("--hfov", type=float, default=90.0, help="horizontal field of view in degrees")
    m.add_argument("--fx", type=float)
    m.add_argument("--fy", type=float)
    m.add_argument("--cx", type=float)
    m.add_argument("--cy", type=float)
    m.add_argument("--min-depth", type=float, default=0.1)
    m.add_argument("--max-depth", type=float, default=10.0)
    m.set_defaults(func=cmd_mask)
    return p


def main(argv=None) -> int:
    level = os.environ.get("MPVO_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise _UsageError("--jobs must be >= 1")
        return args.func(args)
    except (_UsageError, ConfigParse) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileFormat, MpvoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # invalid parameter values (intrinsics, depth ranges, ...)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
