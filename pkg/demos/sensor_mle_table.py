"""Ten-sensor ring localisation: mean localisation error at k = 5, 50, 200.

Compares the potential-game solver with projected, stochastic and
proximal gradient baselines from three perturbed starting profiles.
"""

import os

import numpy as np

from dualnash.runner import run_experiment

HERE = os.path.dirname(os.path.abspath(__file__))


def main(out_dir="sensor_out"):
    rep = run_experiment(os.path.join(HERE, "..", "configs", "sensor_compare.json"), out_dir=out_dir)
    cps = rep.tables["checkpoints"]
    print(f"{'method':16s} " + " ".join(f"{'k=' + str(k):>10s}" for k in cps) + "   (mean over inits)")
    for method, rows in rep.tables["mle"].items():
        mean = np.mean(rows, axis=0)
        print(f"{method:16s} " + " ".join(f"{v:10.4f}" for v in mean))


if __name__ == "__main__":
    main()
