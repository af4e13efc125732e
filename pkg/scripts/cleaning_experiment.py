#!/usr/bin/env python3
"""Cross-fitted cleaning experiment: inject label flips, clean by
prediction variance, and compare downstream performance.

Prints the dataset sizes before/after cleaning, how over-represented the
injected flips are among the removed instances, and test F1 for models
trained on the noisy versus the cleaned data.
"""

import argparse

from annotriage.baselines import bootstrap_predictor, predict_proba, train_baseline
from annotriage.metrics import confusion_metrics
from annotriage.synthgen import synth_text_dataset
from annotriage.triage import CleaningPlan, crossfit_clean


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=600)
    ap.add_argument("--noise", type=float, default=0.15)
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--fraction", type=float, default=0.15)
    ap.add_argument("--samples", type=int, default=30)
    ap.add_argument("--test-n", type=int, default=2000)
    ap.add_argument("--downstream", default="logistic_regression",
                    choices=["naive_bayes", "logistic_regression"])
    ap.add_argument("--seed", type=int, default=101)
    args = ap.parse_args()

    train, _, flips = synth_text_dataset(args.n, seed=args.seed, noise=args.noise)
    test, test_true, _ = synth_text_dataset(args.test_n, seed=args.seed + 101, noise=0.0)

    plan = CleaningPlan(
        folds=args.folds,
        removal_fraction=args.fraction,
        samples_per_instance=args.samples,
        seed=args.seed % 97,
    )
    cleaned, removed = crossfit_clean(train, plan, bootstrap_predictor("naive_bayes"))

    removed_ids = {r.instance_id for r in removed}
    flipped_ids = {train.instances[i].id for i in range(len(train)) if flips[i]}
    hits = len(removed_ids & flipped_ids)

    print(f"{'':<22}{'instances':>10}{'flipped':>10}")
    print(f"{'training set':<22}{len(train):>10}{int(flips.sum()):>10}")
    print(f"{'removed':<22}{len(removed):>10}{hits:>10}")
    print(f"{'cleaned':<22}{len(cleaned):>10}{int(flips.sum()) - hits:>10}")
    rate = hits / max(len(removed), 1)
    print(f"\nflip rate among removed: {rate:.1%} "
          f"({rate / args.noise:.2f}x the {args.noise:.0%} base rate)")

    def f1_of(dataset):
        model = train_baseline(dataset, args.downstream)
        probs = predict_proba(model, [i.text for i in test.instances])
        return confusion_metrics([p.argmax() for p in probs], test_true, 1).f1

    f1_noisy, f1_clean = f1_of(train), f1_of(cleaned)
    print(f"\n{args.downstream} F1 on clean test set:")
    print(f"{'trained on noisy':<22}{f1_noisy:.4f}")
    print(f"{'trained on cleaned':<22}{f1_clean:.4f}")
    print(f"{'delta':<22}{f1_clean - f1_noisy:+.4f}")


if __name__ == "__main__":
    main()
