"""Evaluation metrics and their aggregation protocols.

Two scalar metrics compare a prediction vector with its truth:

    NRMSE(y, yhat) = ||y - yhat|| / (sqrt(K) * (y_max - y_min))
    c(y, yhat)     = (y . yhat) / (||y|| * ||yhat||)

K is the vector length and (y_max - y_min) the target-voltage range the
model was trained over, so the NRMSE is a dimensionless fraction of the
operating range.  Both are evaluated on the full concatenation of all
examples under test, and the repeated-test protocol re-draws the shot
noise each repetition to expose the statistical spread.
"""

from dataclasses import dataclass

import numpy as np

from .device import estimate_probabilities, sample_counts
from .errors import DegenerateDataError, InvalidParameterError, UndefinedMetricError

__all__ = [
    "nrmse",
    "cosine_similarity",
    "fresh_noise",
    "EvaluationReport",
    "repeated_test_evaluation",
    "AggregateSummary",
    "aggregate_trainings",
    "format_value",
    "write_report",
    "write_rows_csv",
]


def nrmse(y, yhat, y_min: float, y_max: float) -> float:
    """Range-normalized root-mean-square error of a flat vector pair."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape or y.size == 0:
        raise InvalidParameterError("nrmse needs two equal-length nonempty vectors")
    if not y_max > y_min:
        raise InvalidParameterError("degenerate normalization range: y_max must exceed y_min")
    e = y - yhat
    return float(np.sqrt(np.dot(e, e) / y.size) / (y_max - y_min))


def cosine_similarity(y, yhat) -> float:
    """Normalized inner product; 1 means proportional with positive scale."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape or y.size == 0:
        raise InvalidParameterError("cosine needs two equal-length nonempty vectors")
    yy = np.dot(y, y)
    hh = np.dot(yhat, yhat)
    if yy == 0.0 or hh == 0.0:
        raise UndefinedMetricError("cosine similarity of a zero-norm vector is undefined")
    return float(np.dot(y, yhat) / np.sqrt(yy * hh))


@dataclass(frozen=True)
class EvaluationReport:
    """Mean and sample standard deviation over noise repetitions."""

    nrmse: float
    nrmse_spread: float
    cosine: float
    cosine_spread: float
    n_repetitions: int
    n_examples_per_rep: int
    degenerate_spread: bool = False


def fresh_noise(probs, mean_total, rng):
    """Re-draw the shot noise of a 12-column probability block.

    Counts are sampled per six-outcome measurement and renormalized;
    mean_total=None returns the block unchanged (noise-free).
    """
    if mean_total is None:
        return probs
    feats = np.empty_like(probs)
    feats[:, :6] = estimate_probabilities(sample_counts(probs[:, :6], mean_total, rng))
    feats[:, 6:] = estimate_probabilities(sample_counts(probs[:, 6:], mean_total, rng))
    return feats


def repeated_test_evaluation(
    predict_fn,
    pool_probs,
    pool_targets,
    mean_total,
    span: float,
    rep_count: int = 500,
    rep_size: int = 100,
    rng: np.random.Generator | None = None,
    return_samples: bool = False,
):
    """Metric statistics over repeated noisy test draws.

    Each repetition samples `rep_size` pool entries without replacement,
    re-draws their Poisson counts (mean_total=None skips the noise),
    predicts, and evaluates both metrics on the concatenated vectors.
    `predict_fn` maps an (n, 12) feature block to (n, 4) voltages.
    Returns an EvaluationReport, or with return_samples=True the tuple
    (report, per_rep_nrmse, per_rep_cosine).
    """
    pool_probs = np.asarray(pool_probs, dtype=float)
    pool_targets = np.asarray(pool_targets, dtype=float)
    if rep_count < 1:
        raise InvalidParameterError("rep_count must be >= 1")
    if not 1 <= rep_size <= pool_probs.shape[0]:
        raise InvalidParameterError(
            f"rep_size {rep_size} exceeds the {pool_probs.shape[0]}-example pool"
        )
    if rng is None:
        rng = np.random.default_rng()
    nr = np.empty(rep_count)
    cs = np.empty(rep_count)
    for r in range(rep_count):
        idx = rng.choice(pool_probs.shape[0], size=rep_size, replace=False)
        feats = fresh_noise(pool_probs[idx], mean_total, rng)
        yhat = np.asarray(predict_fn(feats), dtype=float).ravel()
        y = pool_targets[idx].ravel()
        nr[r] = nrmse(y, yhat, 0.0, span)
        cs[r] = cosine_similarity(y, yhat)
    degenerate = rep_count < 2
    report = EvaluationReport(
        nrmse=float(nr.mean()),
        nrmse_spread=0.0 if degenerate else float(nr.std(ddof=1)),
        cosine=float(cs.mean()),
        cosine_spread=0.0 if degenerate else float(cs.std(ddof=1)),
        n_repetitions=rep_count,
        n_examples_per_rep=rep_size,
        degenerate_spread=degenerate,
    )
    if return_samples:
        return report, nr, cs
    return report


@dataclass(frozen=True)
class AggregateSummary:
    nrmse_mean: float
    nrmse_sd: float
    cosine_mean: float
    cosine_sd: float
    n_runs: int


def aggregate_trainings(final_nrmse, test_cosine) -> AggregateSummary:
    """Mean and sample SD across independent training runs."""
    nr = np.asarray(final_nrmse, dtype=float)
    cs = np.asarray(test_cosine, dtype=float)
    if nr.size != cs.size or nr.size < 2:
        raise DegenerateDataError("aggregation needs at least 2 matching runs")
    return AggregateSummary(
        nrmse_mean=float(nr.mean()),
        nrmse_sd=float(nr.std(ddof=1)),
        cosine_mean=float(cs.mean()),
        cosine_sd=float(cs.std(ddof=1)),
        n_runs=int(nr.size),
    )


def format_value(x) -> str:
    """Stable text form: shortest round-trip repr for floats."""
    if isinstance(x, (bool, int, str)):
        return str(x)
    return repr(float(x))


def write_report(path, pairs):
    """Line-oriented `key = value` report, deterministic byte for byte."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {format_value(value)}\n")


def write_rows_csv(path, header, rows):
    """Small CSV writer with the same stable float formatting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(x) for x in row) + "\n")
