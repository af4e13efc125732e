#!/usr/bin/env python3
"""Removal-trend experiment: metrics on the retained test subset as
increasingly many high-variance instances are removed.

Prints one metrics column per removal budget, mirroring the shape of the
headline uncertainty-removal table.
"""

import argparse

import numpy as np

from annotriage.baselines import bootstrap_sample_predictions
from annotriage.metrics import confusion_metrics
from annotriage.synthgen import synth_text_dataset
from annotriage.triage import aggregate_samples, rank_and_partition


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000, help="train and test size")
    ap.add_argument("--noise", type=float, default=0.2)
    ap.add_argument("--subtle-frac", type=float, default=0.3)
    ap.add_argument("--samples", type=int, default=30, help="bootstrap fits (T)")
    ap.add_argument("--budgets", default="0,0.2,0.5,0.7")
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    train, _, _ = synth_text_dataset(
        args.n, seed=args.seed, noise=args.noise, subtle_frac=args.subtle_frac
    )
    test, _, _ = synth_text_dataset(
        args.n, seed=args.seed + 1, noise=args.noise, subtle_frac=args.subtle_frac
    )
    observed = np.array([i.gold_label for i in test.instances])

    matrix = bootstrap_sample_predictions(
        train, "naive_bayes", [i.text for i in test.instances],
        args.samples, seed=args.seed, instance_ids=[i.id for i in test.instances],
    )
    records = aggregate_samples(matrix)
    by_id = {r.instance_id: r for r in records}
    position = {inst.id: k for k, inst in enumerate(test.instances)}

    budgets = [float(b) for b in args.budgets.split(",")]
    columns = []
    for budget in budgets:
        part = rank_and_partition(records, budget)
        kept = [position[i] for i in part.certain]
        predicted = np.array([by_id[test.instances[k].id].predicted_class for k in kept])
        rep = confusion_metrics(predicted, observed[kept], positive_class=1)
        columns.append((budget, len(part.uncertain), rep))

    header = "".join(f"{f'{b:.0%} removed':>16}" for b, _, _ in columns)
    print(f"{'metric':<12}{header}")
    for name in ("accuracy", "precision", "recall", "f1"):
        row = "".join(f"{getattr(rep, name):>16.4f}" for _, _, rep in columns)
        print(f"{name:<12}{row}")
    print(f"{'removed':<12}" + "".join(f"{k:>16d}" for _, k, _ in columns))


if __name__ == "__main__":
    main()
