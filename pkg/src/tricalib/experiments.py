"""End-to-end study harnesses: grid-size sweep, kick ablation, epoch
curves, prediction surfaces, and probability-surface rendering.

Every harness is deterministic given its seeds, reads one resolved
configuration, and writes a results directory containing

    config.echo   the settings actually used, key = value
    results.csv   the study's table (plus runs.csv for per-run rows)
    report.txt    headline numbers, key = value

Wall-clock timings never enter these files, so repeated runs with the
same seeds are byte-identical.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import DeviceConfig
from .data import (
    Dataset,
    KickConfig,
    build_grid,
    generate_simulated,
    kick_from_steps,
    normalize_targets,
    split,
    write_measurement_csv,
)
from .device import estimate_probabilities, sample_counts, voltage_probabilities
from .errors import InvalidParameterError
from .metrics import (
    fresh_noise,
    nrmse,
    repeated_test_evaluation,
    write_report,
    write_rows_csv,
)
from .net import TrainConfig, forward, predict, train

__all__ = [
    "SweepConfig",
    "train_on_dataset",
    "exact_feature_pool",
    "run_grid_sweep",
    "run_kick_ablation",
    "run_epoch_curves",
    "run_prediction_surface",
    "render_probability_surfaces",
]

DEFAULT_SWEEP_SIZES = (10, 15, 20, 30, 40, 53)


@dataclass(frozen=True)
class SweepConfig:
    grid_sizes: tuple = DEFAULT_SWEEP_SIZES
    trainings_per_size: int = 50
    test_size: int = 100

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.grid_sizes)
        if not sizes or any(s < 2 for s in sizes) or list(sizes) != sorted(sizes):
            raise InvalidParameterError("sweep sizes must be ascending and >= 2")
        if self.trainings_per_size < 1 or self.test_size < 1:
            raise InvalidParameterError("trainings per size and test size must be >= 1")
        object.__setattr__(self, "grid_sizes", sizes)


def _combine(base_seed: int, size: int, run: int) -> int:
    # deterministic per-(size, run) seed derivation, documented in config.echo
    return base_seed * 1_000_000 + size * 1_000 + run


def train_on_dataset(dataset: Dataset, cfg: TrainConfig, split_seed: int,
                     val_fraction: float = 0.15):
    """Split, normalize on the train side, train.

    Returns (params, adam, report, scaling, val_split) where val_split
    still carries raw volt targets.
    """
    train_raw, val_raw = split(dataset, val_fraction, np.random.default_rng(split_seed))
    train_ds, scaling = normalize_targets(train_raw)
    val_ds = replace(val_raw, targets=scaling.transform(val_raw.targets),
                     normalization=scaling)
    params, adam, report = train(train_ds, val_ds, cfg)
    return params, adam, report, scaling, val_raw


def exact_feature_pool(dataset: Dataset, device: DeviceConfig):
    """Noise-free feature probabilities for every example of a dataset.

    Simulated data are re-evaluated through the device model at their
    target voltages; for experimental data the stored probabilities are
    the best available stand-in for the truth.
    """
    if dataset.provenance == "simulated":
        base = voltage_probabilities(dataset.targets[:, :2], device.coeffs, device.tritter)
        kicked = voltage_probabilities(dataset.targets[:, 2:4], device.coeffs, device.tritter)
        return np.concatenate([base, kicked], axis=-1)
    return dataset.features


def _ensure_dir(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def run_grid_sweep(
    device: DeviceConfig,
    sweep: SweepConfig,
    train_cfg: TrainConfig,
    grid_min: float,
    grid_max: float,
    kick_steps: int,
    data_seed: int,
    train_seed: int,
    eval_seed: int,
    split_seed: int,
    out_dir,
    mean_total: float | None = -1.0,
    val_fraction: float = 0.15,
    jobs: int = 1,
):
    """Training-set-size study.

    The kick offset is fixed in volts (kick_steps steps of the largest
    grid) so every size trains and tests the same physical acquisition.
    The 100-example test pool is drawn once from the largest grid and
    held fixed; each run sees it with its own fresh shot noise.  Returns
    the per-size summary rows.
    """
    _ensure_dir(out_dir)
    sizes = sweep.grid_sizes
    largest = sizes[-1]
    ref_grid = build_grid(grid_min, grid_max, largest)
    kick = kick_from_steps(ref_grid, kick_steps, kick_steps)
    if mean_total is not None and mean_total == -1.0:
        mean_total = device.mean_total

    pool = generate_simulated(ref_grid, kick, device,
                              np.random.default_rng(_combine(data_seed, largest, 999)),
                              mean_total=None)
    pick = np.random.default_rng(_combine(eval_seed, 0, 0)).choice(
        len(pool), size=sweep.test_size, replace=False)
    test_probs, test_targets = pool.features[pick], pool.targets[pick]

    datasets = {}
    for size in sizes:
        grid = build_grid(grid_min, grid_max, size)
        rng = np.random.default_rng(_combine(data_seed, size, 0))
        datasets[size] = generate_simulated(grid, kick, device, rng, mean_total=mean_total)

    def one_run(size, run):
        cfg = replace(train_cfg, seed=_combine(train_seed, size, run))
        params, _, report, scaling, _ = train_on_dataset(
            datasets[size], cfg, split_seed, val_fraction)
        # cosine goes over the full 4-target concatenation of the test draw
        ev = repeated_test_evaluation(
            lambda feats: scaling.invert(forward(params, feats)),
            test_probs,
            test_targets,
            mean_total,
            scaling.pooled_span(),
            rep_count=1,
            rep_size=sweep.test_size,
            rng=np.random.default_rng(_combine(eval_seed, size, run)),
        )
        return report.val_nrmse[report.best_epoch], ev.cosine

    keys = [(size, run) for size in sizes for run in range(sweep.trainings_per_size)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            results = list(pool_exec.map(lambda k: one_run(*k), keys))
    else:
        results = [one_run(*k) for k in keys]
    per_run = dict(zip(keys, results))

    run_rows = [(size, run, *per_run[(size, run)]) for size, run in keys]
    summary_rows = []
    for size in sizes:
        nr = np.array([per_run[(size, r)][0] for r in range(sweep.trainings_per_size)])
        cs = np.array([per_run[(size, r)][1] for r in range(sweep.trainings_per_size)])
        degenerate = nr.size < 2
        summary_rows.append((
            size, nr.size,
            float(nr.mean()), 0.0 if degenerate else float(nr.std(ddof=1)),
            float(cs.mean()), 0.0 if degenerate else float(cs.std(ddof=1)),
        ))

    write_report(os.path.join(out_dir, "config.echo"), [
        ("harness", "sweep-grid"),
        ("grid_sizes", " ".join(str(s) for s in sizes)),
        ("trainings_per_size", sweep.trainings_per_size),
        ("test_size", sweep.test_size),
        ("grid_min", grid_min), ("grid_max", grid_max),
        ("kick_steps_of_largest_grid", kick_steps),
        ("kick_dv1", kick.dv1), ("kick_dv2", kick.dv2),
        ("mean_total", "none" if mean_total is None else mean_total),
        ("val_fraction", val_fraction),
        ("data_seed", data_seed), ("train_seed", train_seed),
        ("eval_seed", eval_seed), ("split_seed", split_seed),
        ("seed_rule", "base*1000000 + size*1000 + run"),
        ("max_epochs", train_cfg.max_epochs), ("batch_size", train_cfg.batch_size),
        ("learning_rate", train_cfg.learning_rate), ("patience", train_cfg.patience),
    ])
    write_rows_csv(os.path.join(out_dir, "runs.csv"),
                   ["size", "run", "val_nrmse", "test_cosine"], run_rows)
    write_rows_csv(
        os.path.join(out_dir, "results.csv"),
        ["size", "n_runs", "val_nrmse_mean", "val_nrmse_sd",
         "test_cosine_mean", "test_cosine_sd"],
        summary_rows)
    report_pairs = [("harness", "sweep-grid")]
    for size, n_runs, nm, nsd, cm, csd in summary_rows:
        report_pairs += [
            (f"size_{size}_val_nrmse_mean", nm),
            (f"size_{size}_val_nrmse_sd", nsd),
            (f"size_{size}_test_cosine_mean", cm),
            (f"size_{size}_test_cosine_sd", csd),
        ]
        if n_runs < 2:
            report_pairs.append((f"size_{size}_spread_degenerate", True))
    write_report(os.path.join(out_dir, "report.txt"), report_pairs)
    return summary_rows


def run_kick_ablation(
    device: DeviceConfig,
    train_cfg: TrainConfig,
    grid_min: float,
    grid_max: float,
    grid_n: int,
    kick_steps: int,
    data_seed: int,
    split_seed: int,
    out_dir,
    mean_total: float | None = -1.0,
    val_fraction: float = 0.15,
):
    """Paired comparison of the kicked network against a bare one.

    The unkicked variant sees only six base probabilities and predicts
    the two base voltages, but keeps the same hidden layers, the same
    settings, the same split and the same training seed.  Because a
    kicked example is built from two acquisitions, the bare variant's
    counts are drawn at twice the per-acquisition budget: both variants
    then see the same total photon number, and the improvement fraction
    isolates what the kick's structure adds, not the extra counts.  The
    default budget (-1.0) is the device config's mean_total; pass None
    to compare on exact probabilities instead (no noise at all).

    Returns (rmse_with, rmse_without, improvement_fraction), validation
    RMSE in volts.
    """
    _ensure_dir(out_dir)
    grid = build_grid(grid_min, grid_max, grid_n)
    kick = kick_from_steps(grid, kick_steps, kick_steps)
    if mean_total is not None and mean_total == -1.0:
        mean_total = device.mean_total
    rng = np.random.default_rng(_combine(data_seed, grid_n, 0))
    kicked_ds = generate_simulated(grid, kick, device, rng, mean_total=mean_total)
    base_probs = voltage_probabilities(kicked_ds.targets[:, :2], device.coeffs,
                                       device.tritter)
    if mean_total is None:
        bare_feats = base_probs
        bare_budget = None
    else:
        bare_budget = 2.0 * mean_total
        bare_feats = estimate_probabilities(
            sample_counts(base_probs, bare_budget, rng))
    bare_ds = replace(kicked_ds, features=bare_feats,
                      targets=kicked_ds.targets[:, :2], mean_total=bare_budget)

    def val_rmse_volts(dataset):
        params, _, report, scaling, val_raw = train_on_dataset(
            dataset, train_cfg, split_seed, val_fraction)
        yhat = scaling.invert(forward(params, val_raw.features))
        err = yhat - val_raw.targets
        return float(np.sqrt((err**2).mean())), report.best_epoch

    rmse_with, best_with = val_rmse_volts(kicked_ds)
    rmse_without, best_without = val_rmse_volts(bare_ds)
    improvement = 1.0 - rmse_with / rmse_without

    write_report(os.path.join(out_dir, "config.echo"), [
        ("harness", "ablate-kicks"),
        ("grid_min", grid_min), ("grid_max", grid_max), ("grid_n", grid_n),
        ("kick_steps", kick_steps),
        ("kick_dv1", kick.dv1), ("kick_dv2", kick.dv2),
        ("mean_total", "none" if mean_total is None else mean_total),
        ("mean_total_bare", "none" if bare_budget is None else bare_budget),
        ("val_fraction", val_fraction),
        ("data_seed", data_seed), ("split_seed", split_seed),
        ("train_seed", train_cfg.seed),
        ("max_epochs", train_cfg.max_epochs), ("batch_size", train_cfg.batch_size),
        ("learning_rate", train_cfg.learning_rate), ("patience", train_cfg.patience),
    ])
    write_rows_csv(
        os.path.join(out_dir, "results.csv"),
        ["variant", "n_inputs", "n_outputs", "mean_total", "best_epoch",
         "val_rmse_volts"],
        [("with_kick", 12, 4,
          "none" if mean_total is None else mean_total, best_with, rmse_with),
         ("without_kick", 6, 2,
          "none" if bare_budget is None else bare_budget, best_without,
          rmse_without)])
    write_report(os.path.join(out_dir, "report.txt"), [
        ("rmse_with_kick_volts", rmse_with),
        ("rmse_without_kick_volts", rmse_without),
        ("improvement_fraction", improvement),
    ])
    return rmse_with, rmse_without, improvement


def run_epoch_curves(dataset: Dataset, train_cfg: TrainConfig, split_seed: int,
                     out_dir, val_fraction: float = 0.15):
    """Train once and dump the per-epoch validation trajectory."""
    _ensure_dir(out_dir)
    _, _, report, _, _ = train_on_dataset(dataset, train_cfg, split_seed, val_fraction)
    rows = [
        (ep, report.train_loss[ep], report.val_loss[ep],
         report.val_nrmse[ep], report.val_cosine[ep])
        for ep in range(report.epochs_run)
    ]
    write_report(os.path.join(out_dir, "config.echo"), [
        ("harness", "epoch-curves"),
        ("examples", len(dataset)),
        ("provenance", dataset.provenance),
        ("val_fraction", val_fraction),
        ("split_seed", split_seed), ("train_seed", train_cfg.seed),
        ("max_epochs", train_cfg.max_epochs), ("batch_size", train_cfg.batch_size),
        ("learning_rate", train_cfg.learning_rate), ("patience", train_cfg.patience),
    ])
    write_rows_csv(os.path.join(out_dir, "results.csv"),
                   ["epoch", "train_loss", "val_loss", "val_nrmse", "val_cosine"], rows)
    write_report(os.path.join(out_dir, "report.txt"), [
        ("epochs_run", report.epochs_run),
        ("best_epoch", report.best_epoch),
        ("best_val_loss", report.val_loss[report.best_epoch]),
        ("best_val_nrmse", report.val_nrmse[report.best_epoch]),
        ("best_val_cosine", report.val_cosine[report.best_epoch]),
    ])
    return report


def run_prediction_surface(params, scaling, kick: KickConfig, dataset: Dataset,
                           device: DeviceConfig, n_new: int, seed: int, out_dir,
                           mean_total: float | None = -1.0):
    """Scatter of predicted vs true voltages on freshly noised examples."""
    _ensure_dir(out_dir)
    if n_new < 1 or n_new > len(dataset):
        raise InvalidParameterError(f"n_new must lie in [1, {len(dataset)}]")
    if mean_total is not None and mean_total == -1.0:
        mean_total = dataset.mean_total if dataset.mean_total is not None else device.mean_total
    pool = exact_feature_pool(dataset, device)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(dataset), size=n_new, replace=False)
    probs = fresh_noise(pool[idx], mean_total, rng)
    v1, v2, residual = predict(params, probs, scaling, kick)
    truth = dataset.targets[idx]
    error = np.sqrt((v1 - truth[:, 0]) ** 2 + (v2 - truth[:, 1]) ** 2)
    rows = list(zip(truth[:, 0], truth[:, 1], v1, v2, error, residual))
    write_report(os.path.join(out_dir, "config.echo"), [
        ("harness", "prediction-surface"),
        ("n_new", n_new), ("seed", seed),
        ("mean_total", "none" if mean_total is None else mean_total),
        ("provenance", dataset.provenance),
    ])
    write_rows_csv(
        os.path.join(out_dir, "results.csv"),
        ["true_v1", "true_v2", "pred_v1", "pred_v2", "error", "consistency_residual"],
        rows)
    span = scaling.pooled_span()
    write_report(os.path.join(out_dir, "report.txt"), [
        ("n_new", n_new),
        ("rms_error_volts", float(np.sqrt((error**2).mean()))),
        ("median_error_volts", float(np.median(error))),
        ("median_consistency_residual_volts", float(np.median(residual))),
        ("nrmse_pair", nrmse(truth[:, :2].ravel(),
                             np.stack([v1, v2], axis=-1).ravel(), 0.0, span)),
    ])
    return rows


def render_probability_surfaces(device: DeviceConfig, grid_min: float,
                                grid_max: float, resolution: int, out_dir):
    """Noise-free P(i->j) over the voltage plane, for fringe plots.

    results.csv uses the measurement schema, so the rendered surface can
    also serve as a synthetic measured-grid input elsewhere.
    """
    _ensure_dir(out_dir)
    grid = build_grid(grid_min, grid_max, resolution)
    settings = grid.settings()
    probs = voltage_probabilities(settings, device.coeffs, device.tritter)
    write_report(os.path.join(out_dir, "config.echo"), [
        ("harness", "surface"),
        ("grid_min", grid_min), ("grid_max", grid_max),
        ("resolution", resolution),
    ])
    write_measurement_csv(settings, probs, os.path.join(out_dir, "results.csv"),
                          comment="noise-free model probabilities")
    write_report(os.path.join(out_dir, "report.txt"), [
        ("rows", settings.shape[0]),
        ("max_row_sum_error", float(np.abs(
            probs[:, :3].sum(axis=1) - 1.0).max())),
    ])
    return settings, probs
