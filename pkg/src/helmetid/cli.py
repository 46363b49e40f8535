"""Command-line entry point: ``helmetid {simulate,assign,score,pipeline,validate}``.

Exit status: 0 on success, 1 on bad input, 2 on an internal assertion, 64
on a usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from . import config as config_mod
from .core import PlayKey, validate_play
from .io_csv import (
    EmptyFileError,
    SchemaError,
    bundles_from,
    read_detections,
    read_ground_truth,
    read_tracking,
    write_assignments,
    write_detections,
    write_ground_truth,
    write_tracking,
)
from .metrics import ScoreBreakdown, summary, weighted_accuracy, write_score_report
from .pipeline import PipelineConfig, run_play
from .simulator import camera_preset, generate_play

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2, 64

TRACKING_FILE = "tracking.csv"
DETECTIONS_FILE = "detections.csv"
GROUND_TRUTH_FILE = "ground_truth.csv"
ASSIGNMENTS_FILE = "assignments.csv"
SCORE_FILE = "score.csv"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _run_config(args) -> config_mod.RunConfig:
    cfg = config_mod.load(args.config) if getattr(args, "config", None) else config_mod.RunConfig()
    overrides = []
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        overrides.append(tuple(item.split("=", 1)))
    return config_mod.parse_pairs(overrides, cfg) if overrides else cfg


def _simulate(cfg: config_mod.RunConfig, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    cam = camera_preset(cfg.camera)
    tracking, dets, gt = {}, {}, {}
    for sc in cfg.scenarios():
        play = generate_play(sc, cam)
        key = play.bundle.key
        tracking[(key.game_key, key.play_id)] = play.bundle.tracking
        dets[key] = play.bundle.detections
        gt[key] = play.ground_truth
    write_tracking(tracking, os.path.join(out_dir, TRACKING_FILE))
    write_detections(dets, os.path.join(out_dir, DETECTIONS_FILE))
    write_ground_truth(gt, os.path.join(out_dir, GROUND_TRUTH_FILE))


def _warn_rejected(path, result) -> None:
    for r in result.rejected:
        print(f"{path}:{r.line}: rejected row: {r.message}", file=sys.stderr)


def _label_play(job):
    bundle, pcfg = job
    return bundle.key, run_play(bundle, pcfg).labels


def _assign(tracking_path, detections_path, out_path, pcfg: PipelineConfig, jobs: int) -> dict:
    trk = read_tracking(tracking_path)
    dets = read_detections(detections_path)
    _warn_rejected(tracking_path, trk)
    _warn_rejected(detections_path, dets)
    work = [(b, pcfg) for b in bundles_from(trk, dets)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_label_play, work))
    else:
        results = [_label_play(w) for w in work]
    labels = dict(results)
    write_assignments(labels, out_path)
    return labels


def _score(pred_path, gt_path, out_path, cfg: config_mod.RunConfig) -> ScoreBreakdown:
    pred = read_ground_truth(pred_path)
    gt = read_ground_truth(gt_path)
    _warn_rejected(pred_path, pred)
    _warn_rejected(gt_path, gt)
    rows = []
    for key in sorted(gt.groups, key=PlayKey.sort_key):
        s = weighted_accuracy(pred.groups.get(key, []), gt.groups[key], cfg.match_iou, cfg.match_mode, cfg.impact_weight)
        rows.append((str(key), s))
        print(f"{key}: {summary(s)}")
    if not rows:
        raise ValueError(f"{gt_path}: no ground-truth boxes")
    write_score_report(rows, out_path, cfg.impact_weight)
    pooled = ScoreBreakdown.from_counts(
        sum(s.correct_nonimp for _, s in rows), sum(s.total_nonimp for _, s in rows),
        sum(s.correct_imp for _, s in rows), sum(s.total_imp for _, s in rows), cfg.impact_weight,
    )
    print(f"weighted_accuracy {pooled.weighted_accuracy!r}")
    return pooled


def _validate(bundle_dir: str) -> None:
    trk_path = os.path.join(bundle_dir, TRACKING_FILE)
    det_path = os.path.join(bundle_dir, DETECTIONS_FILE)
    trk, dets = read_tracking(trk_path), read_detections(det_path)
    _warn_rejected(trk_path, trk)
    _warn_rejected(det_path, dets)
    for bundle in bundles_from(trk, dets):
        diags = validate_play(bundle)
        print(f"{bundle.key}: {len(diags)} diagnostic(s)")
        for d in diags:
            print(f"  [{d.kind}] frame {d.frame}: {d.message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="helmetid", description="Assign player labels to helmet detections.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, jobs=False):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        if jobs:
            sp.add_argument("--jobs", type=int, default=1, help="plays processed in parallel")

    s = sub.add_parser("simulate", help="write synthetic tracking, detection and ground-truth CSVs")
    common(s)
    s.add_argument("--out", required=True, help="output directory")

    a = sub.add_parser("assign", help="label detections of every play")
    common(a, jobs=True)
    a.add_argument("--tracking", required=True)
    a.add_argument("--detections", required=True)
    a.add_argument("--out", required=True, help="assignments CSV")

    c = sub.add_parser("score", help="weighted accuracy of predictions against ground truth")
    common(c)
    c.add_argument("--pred", required=True)
    c.add_argument("--gt", required=True)
    c.add_argument("--out", required=True, help="score report CSV")

    pl = sub.add_parser("pipeline", help="simulate, assign and score in one go")
    common(pl, jobs=True)
    pl.add_argument("--out", default="pipeline_out", help="output directory")

    v = sub.add_parser("validate", help="print play diagnostics")
    v.add_argument("--bundle", required=True, help="directory holding tracking.csv and detections.csv")
    return p


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "validate":
            _validate(args.bundle)
            return EXIT_OK
        cfg = _run_config(args)
        if args.command == "simulate":
            _simulate(cfg, args.out)
        elif args.command == "assign":
            _assign(args.tracking, args.detections, args.out, cfg.pipeline(), args.jobs)
        elif args.command == "score":
            _score(args.pred, args.gt, args.out, cfg)
        else:
            _simulate(cfg, args.out)
            d = args.out
            _assign(os.path.join(d, TRACKING_FILE), os.path.join(d, DETECTIONS_FILE),
                    os.path.join(d, ASSIGNMENTS_FILE), cfg.pipeline(), args.jobs)
            _score(os.path.join(d, ASSIGNMENTS_FILE), os.path.join(d, GROUND_TRUTH_FILE),
                   os.path.join(d, SCORE_FILE), cfg)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except (SchemaError, EmptyFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
