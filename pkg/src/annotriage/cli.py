"""Command-line entry point wiring the pipelines together.

Every subcommand accepts --seed and --out, writes output files atomically,
and prints exactly one machine-readable JSON summary as its last stdout
line (everything above it is human-readable). Exit codes: 0 success,
1 pipeline error (the module error is printed to stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import baselines, metrics, mm, store, synthgen, triage
from .errors import AnnotriageError


def _summary(payload: dict) -> None:
    print(json.dumps(payload))


def _sniff_format(path) -> str:
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            raw = raw.strip()
            if raw:
                return json.loads(raw).get("format", "")
    return ""


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_triage(args) -> None:
    matrix = store.load_samples(args.samples)
    records = triage.aggregate_samples(matrix)
    budget = args.count if args.count is not None else args.fraction
    result = triage.rank_and_partition(records, budget)
    if args.out:
        buckets = {i: "uncertain" for i in result.uncertain}
        buckets.update({i: "certain" for i in result.certain})
        store.save_uncertainty(records, args.out, matrix.model_id, matrix.t_samples, buckets)
    threshold = result.threshold_variance
    _summary(
        {
            "command": "triage",
            "instances": len(records),
            "flagged": len(result.uncertain),
            "kept": len(result.certain),
            "threshold_variance": None if np.isinf(threshold) else threshold,
            "warning": result.warning,
            "out": args.out,
        }
    )


def _cmd_clean(args) -> None:
    train = store.load_dataset(args.train)
    plan = triage.CleaningPlan(
        folds=args.folds,
        removal_fraction=args.fraction,
        samples_per_instance=args.samples_per_instance,
        seed=args.seed,
    )
    predictor = baselines.bootstrap_predictor(args.kind)
    cleaned, removed = triage.crossfit_clean(train, plan, predictor)
    if args.out:
        store.save_dataset(cleaned, args.out)
    if args.removed:
        store.save_uncertainty(
            removed, args.removed, f"crossfit-{args.kind}", plan.samples_per_instance
        )
    _summary(
        {
            "command": "clean",
            "instances": len(train),
            "removed": len(removed),
            "kept": len(cleaned),
            "out": args.out,
        }
    )


def _cmd_ensemble_fit(args) -> None:
    train = store.load_frame(args.frame)
    config = mm.GibbsConfig(
        k_components=args.k,
        iterations=args.iterations,
        burn_in=args.burn_in,
        thinning=args.thinning,
        seed=args.seed,
    )
    params, diagnostics = mm.fit_mm(
        train, config, delta=args.delta, keep_draws=not args.no_draws
    )
    if args.validation:
        validation = store.load_frame(args.validation)
        grid = [float(g) for g in args.grid.split(",")]
        params = mm.select_regularization(params, validation, grid)
    store.save_params(params, args.out)
    _summary(
        {
            "command": "ensemble-fit",
            "classes": params.m,
            "models": params.r,
            "latent_dim": params.latent_dim,
            "draws": params.n_draws(),
            "retained": diagnostics.retained,
            "inflation": params.inflation.tolist(),
            "out": args.out,
        }
    )


def _cmd_ensemble_predict(args) -> None:
    frame = store.load_frame(args.frame)
    params = store.load_params(args.params)
    probs = mm.predict_frame(frame, params, use_draws=not args.point)
    store.save_predictions(frame.instance_ids, probs, args.out, model_id="mm")
    _summary(
        {
            "command": "ensemble-predict",
            "instances": frame.n_instances,
            "out": args.out,
        }
    )


def _load_gold(path) -> tuple[dict[str, int], int, int]:
    """Gold labels by instance id from a dataset or labeled frame file."""
    kind = _sniff_format(path)
    if kind == "dataset":
        dataset = store.load_dataset(path)
        gold = {
            inst.id: inst.gold_label
            for inst in dataset.instances
            if inst.gold_label is not None
        }
        return gold, dataset.label_space.m, dataset.label_space.positive_class
    if kind == "frame":
        frame = store.load_frame(path)
        if frame.labels is None:
            raise AnnotriageError(f"frame {path} carries no labels")
        gold = {iid: int(lab) for iid, lab in zip(frame.instance_ids, frame.labels)}
        return gold, frame.m_classes, frame.m_classes - 1
    raise AnnotriageError(f"{path}: expected a dataset or frame file, got {kind!r}")


def _load_predicted(path, member: int | None) -> tuple[list[str], np.ndarray]:
    """(ids, positive-prob matrix) from predictions/uncertainty/frame files."""
    kind = _sniff_format(path)
    if kind == "predictions":
        ids, probs = store.load_predictions(path)
        return ids, probs
    if kind == "uncertainty":
        records, _ = store.load_uncertainty(path)
        ids = [r.instance_id for r in records]
        probs = np.array([list(r.mean) for r in records])
        return ids, probs
    if kind == "frame":
        frame = store.load_frame(path)
        j = member if member is not None else 0
        if not 0 <= j < frame.r_models:
            raise AnnotriageError(f"member {j} outside 0..{frame.r_models - 1}")
        return list(frame.instance_ids), frame.predictions[:, j, :]
    raise AnnotriageError(
        f"{path}: expected predictions, uncertainty or frame file, got {kind!r}"
    )


def _aligned_eval_inputs(args) -> tuple[np.ndarray, np.ndarray, int]:
    ids, probs = _load_predicted(args.pred, args.member)
    gold_map, m, default_positive = _load_gold(args.gold)
    positive = args.positive_class if args.positive_class is not None else default_positive
    keep = [i for i, iid in enumerate(ids) if iid in gold_map]
    if not keep:
        raise AnnotriageError("no overlapping instance ids between pred and gold")
    probs = probs[keep]
    gold = np.array([gold_map[ids[i]] for i in keep], dtype=int)
    return probs, gold, positive


def _cmd_eval(args) -> None:
    probs, gold, positive = _aligned_eval_inputs(args)
    predicted = probs.argmax(axis=1)
    report = metrics.confusion_metrics(predicted, gold, positive)
    print(f"{'metric':<12}value")
    for name in ("accuracy", "precision", "recall", "f1"):
        print(f"{name:<12}{getattr(report, name):.4f}")
    if args.out:
        store.atomic_write(args.out, json.dumps(report.as_dict(), indent=1) + "\n")
    _summary({"command": "eval", "instances": int(len(gold)), **report.as_dict()})


def _cmd_calibrate(args) -> None:
    probs, gold, positive = _aligned_eval_inputs(args)
    report = metrics.calibration_report(
        probs[:, positive], (gold == positive).astype(int), bins=args.bins
    )
    print(f"{'bin':<5}{'confidence':<12}{'accuracy':<10}count")
    for b, (conf, acc, count) in enumerate(report.bins, start=1):
        print(f"{b:<5}{conf:<12.4f}{acc:<10.4f}{count}")
    if args.out:
        store.atomic_write(args.out, json.dumps(report.as_dict(), indent=1) + "\n")
    _summary(
        {
            "command": "calibrate",
            "instances": int(len(gold)),
            "ece": report.ece,
            "brier": report.brier,
            "out": args.out,
        }
    )


def _cmd_synth_frame(args) -> None:
    if args.spec:
        spec = store.load_generator_spec(args.spec)
        if args.n:
            from dataclasses import replace

            spec = replace(spec, n=args.n, seed=args.seed)
    else:
        spec = synthgen.preset_generator(args.preset, args.n or 1000, args.seed)
    frame = synthgen.generate(spec)
    store.save_frame(frame, args.out)
    if args.spec_out:
        store.save_generator_spec(spec, args.spec_out)
    _summary(
        {
            "command": "synth-frame",
            "instances": frame.n_instances,
            "models": frame.r_models,
            "classes": frame.m_classes,
            "out": args.out,
        }
    )


def _cmd_synth_text(args) -> None:
    dataset, _, flip_mask = synthgen.synth_text_dataset(
        n=args.n,
        seed=args.seed,
        noise=args.noise,
        noise_model=args.noise_model,
        split_tag=args.split,
    )
    store.save_dataset(dataset, args.out)
    _summary(
        {
            "command": "synth-text",
            "instances": len(dataset),
            "flipped": int(flip_mask.sum()),
            "out": args.out,
        }
    )


def _cmd_serve(args) -> None:
    from . import service

    service.run(
        args.project, host=args.host, port=args.port, hint_override=args.hint_source
    )


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="rng seed")
    common.add_argument("--out", default=None, help="output file (written atomically)")

    parser = argparse.ArgumentParser(prog="annotriage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("triage", parents=[common], help="rank instances by variance")
    p.add_argument("--samples", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--fraction", type=float, default=0.15)
    group.add_argument("--count", type=int, default=None)
    p.set_defaults(func=_cmd_triage)

    p = sub.add_parser("clean", parents=[common], help="cross-fitted training-set cleaning")
    p.add_argument("--train", required=True)
    p.add_argument("--kind", default="naive_bayes",
                   choices=["naive_bayes", "logistic_regression"])
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--fraction", type=float, default=0.15)
    p.add_argument("--samples-per-instance", type=int, default=30)
    p.add_argument("--removed", default=None, help="file for removed-instance records")
    p.set_defaults(func=_cmd_clean)

    p = sub.add_parser("ensemble", help="fit or apply the probabilistic combiner")
    esub = p.add_subparsers(dest="ensemble_command", required=True)

    pf = esub.add_parser("fit", parents=[common])
    pf.add_argument("--frame", required=True)
    pf.add_argument("--validation", default=None,
                    help="labeled frame for variance-inflation selection")
    pf.add_argument("--grid", default="1,2,5,10")
    pf.add_argument("--k", type=int, default=1)
    pf.add_argument("--iterations", type=int, default=2000)
    pf.add_argument("--burn-in", type=int, default=1000)
    pf.add_argument("--thinning", type=int, default=2)
    pf.add_argument("--delta", type=float, default=mm.DELTA_DEFAULT)
    pf.add_argument("--no-draws", action="store_true",
                    help="store only the posterior-mean summary")
    pf.set_defaults(func=_cmd_ensemble_fit)

    pp = esub.add_parser("predict", parents=[common])
    pp.add_argument("--frame", required=True)
    pp.add_argument("--params", required=True)
    pp.add_argument("--point", action="store_true",
                    help="use the point summary instead of averaging draws")
    pp.set_defaults(func=_cmd_ensemble_predict)

    p = sub.add_parser("eval", parents=[common], help="classification metrics table")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--member", type=int, default=None,
                   help="when --pred is a frame, evaluate this member")
    p.add_argument("--positive-class", type=int, default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("calibrate", parents=[common], help="reliability bins and ECE")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--member", type=int, default=None)
    p.add_argument("--positive-class", type=int, default=None)
    p.add_argument("--bins", type=int, default=10)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("synth", help="generate synthetic fixtures")
    ssub = p.add_subparsers(dest="synth_command", required=True)

    sf = ssub.add_parser("frame", parents=[common])
    sf.add_argument("--preset", default="mirror",
                    choices=["mirror", "correlated3", "biased3"])
    sf.add_argument("--spec", default=None, help="generator spec file to use instead")
    sf.add_argument("--spec-out", default=None, help="save the spec used")
    sf.add_argument("--n", type=int, default=None)
    sf.set_defaults(func=_cmd_synth_frame)

    st = ssub.add_parser("text", parents=[common])
    st.add_argument("--n", type=int, default=1000)
    st.add_argument("--noise", type=float, default=0.0)
    st.add_argument("--noise-model", default="subtle", choices=["subtle", "uniform"])
    st.add_argument("--split", default="unsplit")
    st.set_defaults(func=_cmd_synth_text)

    p = sub.add_parser("serve", parents=[common], help="run the annotation API")
    p.add_argument("--project", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--hint-source", default=None, choices=["mm", "mcd"])
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    required_out = {"clean", "synth", "ensemble"}
    if args.command in required_out and not args.out:
        parser.error(f"{args.command}: --out is required")
    try:
        args.func(args)
    except AnnotriageError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
