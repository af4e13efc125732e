"""Command-line wrapper mirroring export_samples."""

from __future__ import annotations

import argparse
import json
import sys

from .export import ModelLoadFailure, NonProbabilisticOutput, export_samples


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="mcd-export",
        description="Export T stochastic forward passes into a samples file.",
    )
    ap.add_argument("--model", required=True,
                    help="model reference, e.g. mypkg.models:classifier")
    ap.add_argument("--dataset", required=True, help="dataset file to predict over")
    ap.add_argument("--samples-per-instance", "-t", type=int, default=20,
                    help="number of stochastic passes (T)")
    ap.add_argument("--out", required=True, help="output samples file")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--model-id", default=None,
                    help="model_id recorded in the header (default: the reference)")
    args = ap.parse_args(argv)

    try:
        export_samples(
            args.model,
            args.dataset,
            args.samples_per_instance,
            args.out,
            seed=args.seed,
            model_id=args.model_id,
        )
    except (ModelLoadFailure, NonProbabilisticOutput, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({
        "command": "mcd-export",
        "model": args.model,
        "T": args.samples_per_instance,
        "out": args.out,
    }))
    return 0


if __name__ == "__main__":
    sys.exit(main())
