"""Pipeline against the nearest-neighbor baseline over a range of seeds."""

import argparse
import time

from helmetid.metrics import weighted_accuracy
from helmetid.pipeline import baseline_nearest, run_play
from helmetid.simulator import ScenarioConfig, camera_preset, generate_play


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--jitter", type=float, default=2.0)
    ap.add_argument("--fp", type=float, default=0.05)
    ap.add_argument("--fn", type=float, default=0.05)
    ap.add_argument("--camera", default="sideline")
    ap.add_argument("--motion", default="linear")
    args = ap.parse_args()

    cam = camera_preset(args.camera)
    wins = 0
    print("seed  pipeline  baseline  seconds")
    for seed in range(args.seeds):
        cfg = ScenarioConfig(n_frames=args.frames, seed=seed, motion=args.motion,
                             jitter_sigma=args.jitter, fp_rate=args.fp, fn_rate=args.fn)
        play = generate_play(cfg, cam)
        t0 = time.perf_counter()
        ours = weighted_accuracy(run_play(play.bundle).labels, play.ground_truth).weighted_accuracy
        dt = time.perf_counter() - t0
        base = weighted_accuracy(baseline_nearest(play.bundle), play.ground_truth).weighted_accuracy
        wins += ours > base
        print(f"{seed:<5} {ours:.5f}   {base:.5f}   {dt:.2f}")
    print(f"pipeline wins {wins}/{args.seeds}")


if __name__ == "__main__":
    main()
