"""Text-only versus text+gaze QWK on generated 600-instance datasets.

Labels depend on three gaze features plus noise and weakly on one text
feature, so adding gaze columns should lift QWK well above the text-only
model. Pass a smaller epoch count for a quick look:

    python demos/synthetic_gain.py --seeds 3 --epochs 2000
"""

import argparse
import time
from dataclasses import replace

from gazerate.experiment import ExperimentConfig, ablation_table, format_table, run_experiment
from gazerate.network import TrainConfig
from gazerate.synthetic import make_synthetic_instances


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--epochs", type=int, default=10000)
    ap.add_argument("--ablate", action="store_true", help="also print per-group ablation deltas for seed 0")
    args = ap.parse_args()

    train = TrainConfig(epochs=args.epochs)
    rows = []
    t0 = time.perf_counter()
    for seed in range(args.seeds):
        inst = make_synthetic_instances(seed)
        cfg = ExperimentConfig("quality", "text", "all", seed, train)
        qwk = {fs: run_experiment(replace(cfg, feature_set=fs), inst).qwk for fs in ("text", "gaze", "both")}
        rows.append((seed, qwk["text"], qwk["gaze"], qwk["both"], qwk["both"] - qwk["text"]))
    print(format_table("Quality QWK on synthetic data", ("seed", "text", "gaze", "both", "gain"), rows))
    print(f"{time.perf_counter() - t0:.0f} s")

    if args.ablate:
        inst = make_synthetic_instances(0)
        cfg = ExperimentConfig("quality", "both", "all", 0, train)
        print()
        print(format_table("Change in QWK when a group is masked", ("ablated", "delta_qwk"),
                           ablation_table(cfg, inst)))


if __name__ == "__main__":
    main()
