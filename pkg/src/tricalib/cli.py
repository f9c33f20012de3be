"""Command line front end.

One binary, nine subcommands:

    simulate      probabilities (optionally counts) at a voltage point or grid
    gen-dataset   simulate a kick-augmented training dataset -> CSV
    train         fit the regressor on a dataset CSV -> checkpoint + report
    predict       invert one 12-probability feature vector -> voltages
    evaluate      repeated noisy test protocol for a trained model
    sweep-grid    grid-size study (fresh dataset and trainings per size)
    ablate-kicks  paired kicked vs unkicked comparison
    epoch-curves  per-epoch validation trajectory of one training
    surface       probability surfaces, or predicted-vs-true scatter with -m

Config files can be overridden by flags; flags win.  All randomness is
controlled by explicit seed flags, and identical command lines with
identical inputs produce byte-identical output files.  Failures exit
with the category codes documented in `tricalib.errors` (argparse usage
errors exit 2, missing files and other OS errors exit 10).
"""

import argparse
import hashlib
import os
import sys
from dataclasses import replace

import numpy as np

from . import config as cfgmod
from . import data as datamod
from .device import phases_from_voltages, sample_counts, voltage_probabilities
from .errors import CalibrationError, InvalidParameterError
from .experiments import (
    SweepConfig,
    exact_feature_pool,
    run_epoch_curves,
    run_grid_sweep,
    run_kick_ablation,
    run_prediction_surface,
    render_probability_surfaces,
)
from .metrics import (
    format_value,
    repeated_test_evaluation,
    write_report,
    write_rows_csv,
)
from .net import TrainConfig, forward, load_checkpoint, predict, save_checkpoint
from .experiments import train_on_dataset

# Reference seeds for the reproducible default pipeline.
DEFAULT_DATA_SEED = 7
DEFAULT_TRAIN_SEED = 3
DEFAULT_SPLIT_SEED = 20
DEFAULT_EVAL_SEED = 11

OS_ERROR_EXIT = 10


def _parse_floats_arg(text, n, what):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise InvalidParameterError(f"{what} needs {n} comma-separated values, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise InvalidParameterError(f"{what} contains a non-numeric value: {text!r}")


def _parse_hidden(text):
    try:
        sizes = tuple(int(p) for p in text.split(",") if p)
    except ValueError:
        raise InvalidParameterError(f"bad hidden layer list {text!r}")
    if not sizes:
        raise InvalidParameterError("hidden layer list is empty")
    return sizes


def _mean_total(counts_flag, device, dataset=None):
    """Map the --counts convention onto a mean photon budget.

    negative -> inherit (dataset metadata if present, else device config),
    0 -> noise-free, positive -> that many expected counts per input.
    """
    if counts_flag is None or counts_flag < 0:
        if dataset is not None and dataset.mean_total is not None:
            return dataset.mean_total
        return device.mean_total
    if counts_flag == 0:
        return None
    return float(counts_flag)


def _train_config(args, seed):
    return TrainConfig(
        max_epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        patience=args.patience,
        seed=seed,
        hidden=_parse_hidden(args.hidden),
    )


def _add_train_flags(sp):
    sp.add_argument("--epochs", type=int, default=250, help="maximum training epochs")
    sp.add_argument("--batch-size", type=int, default=32)
    sp.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate")
    sp.add_argument("--patience", type=int, default=25,
                    help="epochs without validation improvement before stopping")
    sp.add_argument("--hidden", default="200,200,200",
                    help="comma-separated hidden layer widths")
    sp.add_argument("--val-fraction", type=float, default=0.15)


def _add_grid_flags(sp, n_default=cfgmod.GRID_N):
    sp.add_argument("--grid", type=int, default=n_default,
                    help="grid points per voltage axis")
    sp.add_argument("--grid-min", type=float, default=cfgmod.GRID_V_MIN)
    sp.add_argument("--grid-max", type=float, default=cfgmod.GRID_V_MAX)


# ---------------------------------------------------------------- handlers


def cmd_simulate(args):
    device = cfgmod.resolve_device_config(args.device_config)
    if args.volts is None and args.output is None:
        raise InvalidParameterError("simulate needs --volts, or --grid with -o")
    if args.volts is not None:
        v = _parse_floats_arg(args.volts, 2, "--volts")
        if v.min() < device.v_min or v.max() > device.v_max:
            raise InvalidParameterError(
                f"voltages outside the device range [{device.v_min}, {device.v_max}] V")
        phases = phases_from_voltages(v, device.coeffs)
        probs = voltage_probabilities(v, device.coeffs, device.tritter)
        print(f"phases = {format_value(phases[0])} {format_value(phases[1])}")
        print("probabilities = " + " ".join(format_value(p) for p in probs))
        if args.counts and args.counts > 0:
            rng = np.random.default_rng(args.seed)
            counts = sample_counts(probs, float(args.counts), rng)
            print("counts = " + " ".join(str(int(c)) for c in counts))
        return 0
    # grid mode: write a measurement-schema CSV
    grid = datamod.build_grid(args.grid_min, args.grid_max, args.grid)
    settings = grid.settings()
    if settings.max() > device.v_max or settings.min() < device.v_min:
        raise InvalidParameterError("grid exceeds the device voltage range")
    probs = voltage_probabilities(settings, device.coeffs, device.tritter)
    mean_total = _mean_total(args.counts, device) if args.counts != 0 else None
    if args.counts and args.counts > 0:
        rng = np.random.default_rng(args.seed)
        from .device import estimate_probabilities

        probs = estimate_probabilities(sample_counts(probs, mean_total, rng))
    datamod.write_measurement_csv(settings, probs, args.output,
                                  comment="simulated measurement grid")
    print(f"wrote {settings.shape[0]} settings to {args.output}")
    return 0


def cmd_gen_dataset(args):
    device = cfgmod.resolve_device_config(args.device_config)
    grid = datamod.build_grid(args.grid_min, args.grid_max, args.grid)
    kick = datamod.kick_from_steps(grid, args.kick_steps, args.kick_steps)
    mean_total = _mean_total(args.counts, device)
    rng = np.random.default_rng(args.seed)
    ds = datamod.generate_simulated(grid, kick, device, rng,
                                    mean_total=mean_total, replicas=args.replicas)
    datamod.write_csv(ds, args.output)
    print(f"wrote {len(ds)} examples to {args.output}")
    return 0


def _file_sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def cmd_train(args):
    ds = datamod.read_csv(args.input)
    cfg = _train_config(args, args.seed)
    params, adam, report, scaling, val_raw = train_on_dataset(
        ds, cfg, args.split_seed, args.val_fraction)
    provenance = _file_sha256(args.input)
    save_checkpoint(args.output, params, adam, ds.kick, scaling, provenance=provenance)

    report_dir = args.report_dir or (os.path.dirname(args.output) or ".")
    os.makedirs(report_dir, exist_ok=True)
    write_rows_csv(
        os.path.join(report_dir, "curves.csv"),
        ["epoch", "train_loss", "val_loss", "val_nrmse", "val_cosine"],
        [(ep, report.train_loss[ep], report.val_loss[ep],
          report.val_nrmse[ep], report.val_cosine[ep])
         for ep in range(report.epochs_run)])
    best = report.best_epoch
    write_report(os.path.join(report_dir, "report.txt"), [
        ("command", "train"),
        ("input_sha256", provenance),
        ("examples", len(ds)),
        ("validation_examples", len(val_raw)),
        ("seed", args.seed),
        ("split_seed", args.split_seed),
        ("max_epochs", cfg.max_epochs),
        ("batch_size", cfg.batch_size),
        ("learning_rate", cfg.learning_rate),
        ("patience", cfg.patience),
        ("epochs_run", report.epochs_run),
        ("best_epoch", best),
        ("best_val_loss", report.val_loss[best]),
        ("val_nrmse", report.val_nrmse[best]),
        ("val_cosine", report.val_cosine[best]),
        ("normalization_span_volts", scaling.pooled_span()),
    ])
    print(f"best_epoch = {best}")
    print(f"val_nrmse = {format_value(report.val_nrmse[best])}")
    print(f"val_cosine = {format_value(report.val_cosine[best])}")
    print(f"wall_clock_s = {report.wall_clock:.1f}", file=sys.stderr)
    return 0


def cmd_predict(args):
    ckpt = load_checkpoint(args.model)
    feats = _parse_floats_arg(args.probs, 12, "--probs")
    if feats.min() < 0.0 or feats.max() > 1.0:
        raise InvalidParameterError("probabilities must lie in [0, 1]")
    v1, v2, residual = predict(ckpt.params, feats, ckpt.scaling, ckpt.kick)
    print(f"v1 = {format_value(v1)}")
    print(f"v2 = {format_value(v2)}")
    print(f"consistency_residual = {format_value(residual)}")
    return 0


def cmd_evaluate(args):
    device = cfgmod.resolve_device_config(args.device_config)
    ckpt = load_checkpoint(args.model)
    ds = datamod.read_csv(args.input)
    mean_total = _mean_total(args.counts, device, ds)
    rng = np.random.default_rng(args.seed)
    if args.sampling == "grid":
        pool_probs = exact_feature_pool(ds, device)
        pool_targets = ds.targets
    else:
        if ds.provenance != "simulated":
            raise InvalidParameterError(
                "uniform (off-grid) sampling needs a simulated dataset")
        lo = ds.targets[:, :2].min(axis=0)
        hi = ds.targets[:, :2].max(axis=0)
        base = rng.uniform(lo, hi, size=(len(ds), 2))
        kicked = base + ds.kick.offset()
        pool_probs = np.concatenate(
            [voltage_probabilities(base, device.coeffs, device.tritter),
             voltage_probabilities(kicked, device.coeffs, device.tritter)], axis=-1)
        pool_targets = np.concatenate([base, kicked], axis=-1)
    span = ckpt.scaling.pooled_span()
    ev, rep_nrmse, rep_cosine = repeated_test_evaluation(
        lambda feats: ckpt.scaling.invert(forward(ckpt.params, feats)),
        pool_probs, pool_targets, mean_total, span,
        rep_count=args.reps, rep_size=args.rep_size, rng=rng,
        return_samples=True)
    os.makedirs(args.output, exist_ok=True)
    write_rows_csv(os.path.join(args.output, "reps.csv"),
                   ["rep", "nrmse", "cosine"],
                   [(r, rep_nrmse[r], rep_cosine[r]) for r in range(args.reps)])
    write_report(os.path.join(args.output, "report.txt"), [
        ("command", "evaluate"),
        ("model_provenance", ckpt.provenance),
        ("sampling", args.sampling),
        ("mean_total", "none" if mean_total is None else mean_total),
        ("normalization_span_volts", span),
        ("repetitions", ev.n_repetitions),
        ("examples_per_repetition", ev.n_examples_per_rep),
        ("seed", args.seed),
        ("nrmse_mean", ev.nrmse),
        ("nrmse_sd", ev.nrmse_spread),
        ("cosine_mean", ev.cosine),
        ("cosine_sd", ev.cosine_spread),
        ("spread_degenerate", ev.degenerate_spread),
    ])
    print(f"nrmse = {format_value(ev.nrmse)} +- {format_value(ev.nrmse_spread)}")
    print(f"cosine = {format_value(ev.cosine)} +- {format_value(ev.cosine_spread)}")
    return 0


def cmd_sweep_grid(args):
    device = cfgmod.resolve_device_config(args.device_config)
    sizes = tuple(int(s) for s in args.sizes.split(","))
    sweep = SweepConfig(grid_sizes=sizes, trainings_per_size=args.trainings,
                        test_size=args.test_size)
    base_cfg = _train_config(args, seed=0)
    run_grid_sweep(
        device, sweep, base_cfg, args.grid_min, args.grid_max, args.kick_steps,
        data_seed=args.data_seed, train_seed=args.train_seed,
        eval_seed=args.eval_seed, split_seed=args.split_seed,
        out_dir=args.output, mean_total=_mean_total(args.counts, device),
        val_fraction=args.val_fraction, jobs=args.jobs)
    print(f"sweep results in {args.output}")
    return 0


def cmd_ablate_kicks(args):
    device = cfgmod.resolve_device_config(args.device_config)
    cfg = _train_config(args, args.train_seed)
    if args.counts == 0:
        mean_total = None
    elif args.counts < 0:
        mean_total = -1.0
    else:
        mean_total = float(args.counts)
    rmse_with, rmse_without, improvement = run_kick_ablation(
        device, cfg, args.grid_min, args.grid_max, args.grid, args.kick_steps,
        data_seed=args.data_seed, split_seed=args.split_seed,
        out_dir=args.output, mean_total=mean_total,
        val_fraction=args.val_fraction)
    print(f"rmse_with_kick = {format_value(rmse_with)}")
    print(f"rmse_without_kick = {format_value(rmse_without)}")
    print(f"improvement_fraction = {format_value(improvement)}")
    return 0


def cmd_epoch_curves(args):
    ds = datamod.read_csv(args.input)
    cfg = _train_config(args, args.seed)
    report = run_epoch_curves(ds, cfg, args.split_seed, args.output,
                              val_fraction=args.val_fraction)
    print(f"epochs_run = {report.epochs_run}, best_epoch = {report.best_epoch}")
    return 0


def cmd_surface(args):
    device = cfgmod.resolve_device_config(args.device_config)
    if args.model is None:
        render_probability_surfaces(device, args.grid_min, args.grid_max,
                                    args.resolution, args.output)
        print(f"probability surfaces in {args.output}")
        return 0
    if args.input is None:
        raise InvalidParameterError("prediction surface needs a dataset: -i data.csv")
    ckpt = load_checkpoint(args.model)
    ds = datamod.read_csv(args.input)
    mean_total = _mean_total(args.counts, device, ds)
    run_prediction_surface(ckpt.params, ckpt.scaling, ckpt.kick, ds, device,
                           n_new=args.n_new, seed=args.seed, out_dir=args.output,
                           mean_total=mean_total)
    print(f"prediction surface in {args.output}")
    return 0


# ------------------------------------------------------------------ parser


def build_parser():
    ap = argparse.ArgumentParser(
        prog="tricalib",
        description="Neural-network calibration of a simulated two-phase "
                    "three-mode interferometer.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        sp.add_argument("--device-config", default=None,
                        help=f"device config file (default: "
                             f"${cfgmod.CONFIG_DIR_ENV}/{cfgmod.CONFIG_FILE_NAME} "
                             f"or built-in defaults)")
        return sp

    sp = add("simulate", cmd_simulate, "model probabilities at a point or grid")
    sp.add_argument("--volts", help="one setting 'v1,v2'; prints to stdout")
    _add_grid_flags(sp, n_default=50)
    sp.add_argument("--counts", type=float, default=0,
                    help="photon budget; 0 = exact probabilities")
    sp.add_argument("--seed", type=int, default=DEFAULT_DATA_SEED)
    sp.add_argument("-o", "--output", help="measurement CSV path (grid mode)")

    sp = add("gen-dataset", cmd_gen_dataset, "simulate a kick-augmented dataset")
    _add_grid_flags(sp)
    sp.add_argument("--kick-steps", type=int, default=cfgmod.KICK_STEPS,
                    help="kick offset in grid steps (both axes)")
    sp.add_argument("--counts", type=float, default=-1,
                    help="photon budget per input; -1 = device config, 0 = noise-free")
    sp.add_argument("--replicas", type=int, default=1,
                    help="independent noise draws per grid setting")
    sp.add_argument("--seed", type=int, default=DEFAULT_DATA_SEED)
    sp.add_argument("-o", "--output", required=True, help="dataset CSV path")

    sp = add("train", cmd_train, "train the regressor on a dataset CSV")
    sp.add_argument("-i", "--input", required=True, help="dataset CSV")
    sp.add_argument("-o", "--output", required=True, help="checkpoint path")
    sp.add_argument("--report-dir", default=None,
                    help="where report.txt and curves.csv go (default: checkpoint dir)")
    sp.add_argument("--seed", type=int, default=DEFAULT_TRAIN_SEED)
    sp.add_argument("--split-seed", type=int, default=DEFAULT_SPLIT_SEED)
    _add_train_flags(sp)

    sp = add("predict", cmd_predict, "invert one feature vector")
    sp.add_argument("-m", "--model", required=True, help="checkpoint path")
    sp.add_argument("--probs", required=True,
                    help="12 comma-separated probabilities (base then kicked)")

    sp = add("evaluate", cmd_evaluate, "repeated noisy test evaluation")
    sp.add_argument("-m", "--model", required=True)
    sp.add_argument("-i", "--input", required=True, help="dataset CSV (test pool)")
    sp.add_argument("-o", "--output", required=True, help="results directory")
    sp.add_argument("--reps", type=int, default=500)
    sp.add_argument("--rep-size", type=int, default=100)
    sp.add_argument("--seed", type=int, default=DEFAULT_EVAL_SEED)
    sp.add_argument("--counts", type=float, default=-1,
                    help="photon budget for fresh noise; -1 = dataset/device, 0 = none")
    sp.add_argument("--sampling", choices=("grid", "uniform"), default="grid",
                    help="test points: dataset grid points, or uniform off-grid draws")

    sp = add("sweep-grid", cmd_sweep_grid, "grid-size study")
    sp.add_argument("--sizes", default=",".join(str(s) for s in (10, 15, 20, 30, 40, 53)))
    sp.add_argument("--trainings", type=int, default=50, help="trainings per size")
    sp.add_argument("--test-size", type=int, default=100)
    sp.add_argument("--grid-min", type=float, default=cfgmod.GRID_V_MIN)
    sp.add_argument("--grid-max", type=float, default=cfgmod.GRID_V_MAX)
    sp.add_argument("--kick-steps", type=int, default=cfgmod.KICK_STEPS)
    sp.add_argument("--counts", type=float, default=-1)
    sp.add_argument("--data-seed", type=int, default=DEFAULT_DATA_SEED)
    sp.add_argument("--train-seed", type=int, default=DEFAULT_TRAIN_SEED)
    sp.add_argument("--eval-seed", type=int, default=DEFAULT_EVAL_SEED)
    sp.add_argument("--split-seed", type=int, default=DEFAULT_SPLIT_SEED)
    sp.add_argument("--jobs", type=int, default=1, help="concurrent trainings")
    sp.add_argument("-o", "--output", required=True)
    _add_train_flags(sp)

    sp = add("ablate-kicks", cmd_ablate_kicks, "kicked vs unkicked comparison")
    _add_grid_flags(sp)
    sp.add_argument("--kick-steps", type=int, default=cfgmod.KICK_STEPS)
    sp.add_argument("--counts", type=float, default=-1,
                    help="per-acquisition photon budget (bare variant gets 2x); "
                         "-1 = device config, 0 = noise-free")
    sp.add_argument("--data-seed", type=int, default=DEFAULT_DATA_SEED)
    sp.add_argument("--train-seed", type=int, default=DEFAULT_TRAIN_SEED)
    sp.add_argument("--split-seed", type=int, default=DEFAULT_SPLIT_SEED)
    sp.add_argument("-o", "--output", required=True)
    _add_train_flags(sp)

    sp = add("epoch-curves", cmd_epoch_curves, "per-epoch validation trajectory")
    sp.add_argument("-i", "--input", required=True, help="dataset CSV")
    sp.add_argument("--seed", type=int, default=DEFAULT_TRAIN_SEED)
    sp.add_argument("--split-seed", type=int, default=DEFAULT_SPLIT_SEED)
    sp.add_argument("-o", "--output", required=True)
    _add_train_flags(sp)

    sp = add("surface", cmd_surface, "probability surfaces, or predictions with -m")
    sp.add_argument("--resolution", type=int, default=60)
    sp.add_argument("--grid-min", type=float, default=cfgmod.GRID_V_MIN)
    sp.add_argument("--grid-max", type=float, default=cfgmod.GRID_V_MAX)
    sp.add_argument("-m", "--model", default=None, help="checkpoint -> prediction mode")
    sp.add_argument("-i", "--input", default=None, help="dataset CSV (prediction mode)")
    sp.add_argument("--n-new", type=int, default=100)
    sp.add_argument("--seed", type=int, default=DEFAULT_EVAL_SEED)
    sp.add_argument("--counts", type=float, default=-1)
    sp.add_argument("-o", "--output", required=True)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CalibrationError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error[os]: {exc}", file=sys.stderr)
        return OS_ERROR_EXIT


if __name__ == "__main__":
    sys.exit(main())
