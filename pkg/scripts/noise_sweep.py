"""Pipeline accuracy as one noise channel grows, the others held at zero."""

import argparse

import numpy as np

from helmetid.metrics import weighted_accuracy
from helmetid.pipeline import run_play
from helmetid.simulator import ScenarioConfig, generate_play

LEVELS = {
    "jitter_sigma": [0.0, 1.0, 2.0, 4.0, 8.0],
    "fp_rate": [0.0, 0.05, 0.1, 0.2],
    "fn_rate": [0.0, 0.05, 0.1, 0.2],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--channel", choices=sorted(LEVELS), default="jitter_sigma")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--frames", type=int, default=120)
    args = ap.parse_args()
    print(f"{args.channel:<12} mean_accuracy  min_accuracy")
    for level in LEVELS[args.channel]:
        accs = []
        for seed in range(args.seeds):
            play = generate_play(ScenarioConfig(n_frames=args.frames, seed=seed, **{args.channel: level}))
            accs.append(weighted_accuracy(run_play(play.bundle).labels, play.ground_truth).weighted_accuracy)
        print(f"{level:<12} {np.mean(accs):.5f}        {min(accs):.5f}")


if __name__ == "__main__":
    main()
