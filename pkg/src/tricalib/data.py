"""Voltage grids, kick-augmented datasets, and their file formats.

A training example pairs twelve probabilities with four voltages:

    features = [P(i->j) at (V1, V2),  P(i->j) at (V1+dV1, V2+dV2)]
    targets  = [V1, V2, V1+dV1, V2+dV2]

The second measurement (the "kick") is taken at a fixed voltage offset
and is what makes the inverse problem well posed: the bare six
probabilities repeat themselves across the operating range, the twelve
almost never do.

Two CSV schemas live here.  The dataset schema (one example per row,
shared by simulated and ingested data):

    v1,v2,v1k,v2k,p11,p12,p13,p21,p22,p23,q11,q12,q13,q21,q22,q23

and the measurement schema for raw per-setting grids as produced by an
experiment (or by `tricalib simulate --grid`):

    v1,v2,p11,p12,p13,p21,p22,p23

Comment lines start with '#'.  The dataset writer stores provenance,
kick offsets and the count budget in leading comments so a round-trip
is lossless.
"""

from dataclasses import dataclass, replace

import numpy as np

from .config import DeviceConfig
from .device import estimate_probabilities, sample_counts, voltage_probabilities
from .errors import (
    DegenerateDataError,
    FileFormatError,
    IngestionError,
    InvalidParameterError,
)

__all__ = [
    "VoltageGrid",
    "KickConfig",
    "Dataset",
    "TargetScaling",
    "build_grid",
    "kick_from_steps",
    "generate_simulated",
    "split",
    "normalize_targets",
    "write_csv",
    "read_csv",
    "write_measurement_csv",
    "read_measurement_csv",
    "ingest_experimental",
]

DATASET_HEADER = "v1,v2,v1k,v2k,p11,p12,p13,p21,p22,p23,q11,q12,q13,q21,q22,q23"
MEASUREMENT_HEADER = "v1,v2,p11,p12,p13,p21,p22,p23"


@dataclass(frozen=True)
class VoltageGrid:
    """Cartesian grid of settings; v1 sweeps the outer loop."""

    v1_values: np.ndarray
    v2_values: np.ndarray

    def __post_init__(self):
        for name in ("v1_values", "v2_values"):
            vals = np.asarray(getattr(self, name), dtype=float)
            if vals.ndim != 1 or vals.size < 2:
                raise InvalidParameterError(f"{name} must be a vector of at least 2 values")
            if not np.all(np.isfinite(vals)) or np.any(np.diff(vals) <= 0):
                raise InvalidParameterError(f"{name} must be finite and strictly increasing")
            object.__setattr__(self, name, vals)

    def settings(self) -> np.ndarray:
        """All (n1*n2, 2) voltage pairs, row-major in (v1, v2)."""
        g1, g2 = np.meshgrid(self.v1_values, self.v2_values, indexing="ij")
        return np.stack([g1.ravel(), g2.ravel()], axis=-1)


@dataclass(frozen=True)
class KickConfig:
    """Fixed voltage offsets (dv1, dv2) of the second measurement."""

    dv1: float
    dv2: float

    def __post_init__(self):
        if not (np.isfinite(self.dv1) and np.isfinite(self.dv2)):
            raise InvalidParameterError("kick offsets must be finite")
        if self.dv1 <= 0.0 or self.dv2 <= 0.0:
            raise InvalidParameterError("kick offsets must be > 0")

    def offset(self) -> np.ndarray:
        return np.array([self.dv1, self.dv2])


@dataclass(frozen=True)
class TargetScaling:
    """Per-dimension affine map of targets onto [0, 1], fitted on train data."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, targets) -> "TargetScaling":
        t = np.asarray(targets, dtype=float)
        lo, hi = t.min(axis=0), t.max(axis=0)
        if np.any(hi <= lo):
            raise DegenerateDataError("constant target dimension; cannot scale to [0, 1]")
        return cls(lo=lo, hi=hi)

    def transform(self, targets):
        return (np.asarray(targets, dtype=float) - self.lo) / (self.hi - self.lo)

    def invert(self, scaled):
        return np.asarray(scaled, dtype=float) * (self.hi - self.lo) + self.lo

    def pooled_span(self) -> float:
        """Overall target-voltage range, the normalization of the NRMSE."""
        return float(self.hi.max() - self.lo.min())


@dataclass(frozen=True)
class Dataset:
    """Immutable example collection plus the metadata needed to reuse it."""

    features: np.ndarray  # (N, 12) probabilities in [0, 1]
    targets: np.ndarray  # (N, 4) volts (or [0,1]-scaled when normalized)
    kick: KickConfig
    provenance: str = "simulated"
    mean_total: float | None = None  # None means noise-free features
    normalization: TargetScaling | None = None

    def __len__(self) -> int:
        return self.features.shape[0]

    def subset(self, idx) -> "Dataset":
        return replace(self, features=self.features[idx], targets=self.targets[idx])


def build_grid(v_min: float, v_max: float, n: int) -> VoltageGrid:
    """`n` equally spaced values per axis over [v_min, v_max]."""
    if n < 2:
        raise InvalidParameterError("grid needs at least 2 values per axis")
    if not (np.isfinite(v_min) and np.isfinite(v_max)) or v_min >= v_max:
        raise InvalidParameterError("grid range must satisfy v_min < v_max")
    vals = np.linspace(v_min, v_max, n)
    return VoltageGrid(v1_values=vals, v2_values=vals.copy())


def kick_from_steps(grid: VoltageGrid, steps1: int, steps2: int) -> KickConfig:
    """Kick offsets as integer multiples of the grid step."""
    if steps1 < 1 or steps2 < 1:
        raise InvalidParameterError("kick steps must be >= 1")
    step1 = float(grid.v1_values[1] - grid.v1_values[0])
    step2 = float(grid.v2_values[1] - grid.v2_values[0])
    return KickConfig(dv1=steps1 * step1, dv2=steps2 * step2)


def generate_simulated(
    grid: VoltageGrid,
    kick: KickConfig,
    device: DeviceConfig,
    rng: np.random.Generator,
    mean_total: float | None = -1.0,
    replicas: int = 1,
) -> Dataset:
    """One example per grid setting (times `replicas` noise draws).

    Probabilities are estimated from Poisson counts with `mean_total`
    expected photons per input, like a real acquisition would.  Pass
    mean_total=None for exact model probabilities (no shot noise); the
    default -1.0 sentinel means "use the device config value".

    Raises invalid-parameter if the grid or any kicked setting falls
    outside the simulable device range.
    """
    if mean_total is not None and mean_total == -1.0:
        mean_total = device.mean_total
    if replicas < 1:
        raise InvalidParameterError("replicas must be >= 1")
    base = grid.settings()
    kicked = base + kick.offset()
    if base.min() < device.v_min or base.max() > device.v_max:
        raise InvalidParameterError("grid exceeds the device voltage range")
    if kicked.max() > device.v_max:
        raise InvalidParameterError(
            "kicked settings exceed the simulable device range "
            f"({kicked.max():.6g} V > {device.v_max:.6g} V)"
        )
    p_base = voltage_probabilities(base, device.coeffs, device.tritter)
    p_kick = voltage_probabilities(kicked, device.coeffs, device.tritter)
    targets = np.concatenate([base, kicked], axis=-1)

    blocks = []
    for _ in range(replicas):
        if mean_total is None:
            blocks.append(np.concatenate([p_base, p_kick], axis=-1))
        else:
            fb = estimate_probabilities(sample_counts(p_base, mean_total, rng))
            fk = estimate_probabilities(sample_counts(p_kick, mean_total, rng))
            blocks.append(np.concatenate([fb, fk], axis=-1))
    features = np.concatenate(blocks, axis=0)
    return Dataset(
        features=features,
        targets=np.tile(targets, (replicas, 1)),
        kick=kick,
        provenance="simulated",
        mean_total=mean_total,
    )


def split(dataset: Dataset, validation_fraction: float, rng: np.random.Generator):
    """Random disjoint (train, validation) partition of the examples."""
    if not 0.0 < validation_fraction < 1.0:
        raise InvalidParameterError("validation fraction must lie in (0, 1)")
    n = len(dataset)
    n_val = int(round(validation_fraction * n))
    n_val = min(max(n_val, 1), n - 1)
    perm = rng.permutation(n)
    return dataset.subset(perm[n_val:]), dataset.subset(perm[:n_val])


def normalize_targets(train: Dataset):
    """Scale train targets to [0, 1] per dimension; returns the record too.

    The scaling is fitted on the training split only.  Apply it to
    other splits with `scaling.transform`.
    """
    scaling = TargetScaling.fit(train.targets)
    scaled = replace(train, targets=scaling.transform(train.targets), normalization=scaling)
    return scaled, scaling


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips,
    # always >= 9 significant digits when they matter.
    return repr(float(x))


def write_csv(dataset: Dataset, path):
    """Serialize a dataset; lossless (floats round-trip bit-exactly)."""
    if dataset.normalization is not None:
        raise InvalidParameterError("refusing to serialize normalized targets; save the raw dataset")
    lines = [
        f"# provenance = {dataset.provenance}",
        f"# dv1 = {_fmt(dataset.kick.dv1)}",
        f"# dv2 = {_fmt(dataset.kick.dv2)}",
        f"# mean_total = {'none' if dataset.mean_total is None else _fmt(dataset.mean_total)}",
        DATASET_HEADER,
    ]
    for t, f in zip(dataset.targets, dataset.features):
        row = [t[0], t[1], t[2], t[3], *f]
        lines.append(",".join(_fmt(x) for x in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_rows(path, header, n_cols):
    """Shared CSV scanner: returns (metadata, rows, row_linenos)."""
    meta: dict[str, str] = {}
    rows = []
    linenos = []
    saw_header = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta[key.strip()] = val.strip()
                continue
            if not saw_header:
                if line != header:
                    raise FileFormatError(
                        f"header mismatch: expected {header!r}", line=lineno
                    )
                saw_header = True
                continue
            parts = line.split(",")
            if len(parts) != n_cols:
                raise FileFormatError(
                    f"expected {n_cols} columns, got {len(parts)}", line=lineno
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise FileFormatError(f"non-numeric field in {line!r}", line=lineno)
            linenos.append(lineno)
    if not saw_header:
        raise FileFormatError(f"missing header line {header!r} in {path}")
    if not rows:
        raise FileFormatError(f"no data rows in {path}")
    return meta, np.array(rows), linenos


def _check_probability_block(block, linenos, first_col):
    bad = np.nonzero((block < 0.0) | (block > 1.0))[0]
    if bad.size:
        raise FileFormatError(
            f"probability outside [0, 1] (column {first_col + 1}+)", line=linenos[bad[0]]
        )


def read_csv(path) -> Dataset:
    """Load a dataset CSV; validates schema, ranges and kick consistency."""
    meta, rows, linenos = _parse_rows(path, DATASET_HEADER, 16)
    targets, features = rows[:, :4], rows[:, 4:]
    _check_probability_block(features, linenos, 4)
    if "dv1" in meta and "dv2" in meta:
        try:
            kick = KickConfig(dv1=float(meta["dv1"]), dv2=float(meta["dv2"]))
        except ValueError:
            raise FileFormatError(f"bad kick metadata {meta['dv1']!r}, {meta['dv2']!r}")
    else:
        kick = KickConfig(
            dv1=float(targets[0, 2] - targets[0, 0]),
            dv2=float(targets[0, 3] - targets[0, 1]),
        )
    drift = np.maximum(
        np.abs((targets[:, 2] - targets[:, 0]) - kick.dv1),
        np.abs((targets[:, 3] - targets[:, 1]) - kick.dv2),
    )
    bad = np.nonzero(drift > 1e-9)[0]
    if bad.size:
        raise FileFormatError("kick offset differs from the dataset's", line=linenos[bad[0]])
    mean_total = None
    if meta.get("mean_total", "none") != "none":
        mean_total = float(meta["mean_total"])
    return Dataset(
        features=features,
        targets=targets,
        kick=kick,
        provenance=meta.get("provenance", "simulated"),
        mean_total=mean_total,
    )


def write_measurement_csv(voltages, probs, path, comment: str | None = None):
    """Raw per-setting grid file in the measurement schema."""
    voltages = np.asarray(voltages, dtype=float)
    probs = np.asarray(probs, dtype=float)
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(MEASUREMENT_HEADER)
    for v, p in zip(voltages, probs):
        lines.append(",".join(_fmt(x) for x in (*v, *p)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_measurement_csv(path):
    """Load a measurement grid file -> (voltages (N,2), probabilities (N,6))."""
    _, rows, linenos = _parse_rows(path, MEASUREMENT_HEADER, 8)
    _check_probability_block(rows[:, 2:], linenos, 2)
    return rows[:, :2], rows[:, 2:]


def _grid_axis(values, name):
    axis = np.unique(values)
    if axis.size < 2:
        raise IngestionError(f"measurement grid has fewer than 2 distinct {name} values")
    steps = np.diff(axis)
    if np.abs(steps - steps[0]).max() > 1e-9 * max(1.0, abs(float(steps[0]))):
        raise IngestionError(f"measurement grid spacing along {name} is not uniform")
    return axis, float(steps[0])


def _steps_on_axis(dv, step, name):
    ratio = dv / step
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-6:
        raise IngestionError(
            f"kick {name} = {dv!r} V is not a positive integer multiple "
            f"of the grid step {step!r} V"
        )
    return k


def ingest_experimental(path, kick: KickConfig):
    """Assemble kicked examples from a measured rectangular grid.

    Each setting is paired with the setting one kick away on the same
    grid; border settings whose partner was never measured are dropped.
    Returns (dataset, n_dropped).

    Raises ingestion errors when the grid is not rectangular/uniform or
    the kick does not land on grid points.
    """
    voltages, probs = read_measurement_csv(path)
    axis1, step1 = _grid_axis(voltages[:, 0], "v1")
    axis2, step2 = _grid_axis(voltages[:, 1], "v2")
    if axis1.size * axis2.size != voltages.shape[0]:
        raise IngestionError(
            f"measurement grid is not rectangular: {axis1.size} x {axis2.size} "
            f"axes but {voltages.shape[0]} rows"
        )
    index = {}
    for row, (u, w) in enumerate(voltages):
        i = int(np.searchsorted(axis1, u))
        j = int(np.searchsorted(axis2, w))
        if (i, j) in index:
            raise IngestionError(f"duplicate measurement at v = ({u!r}, {w!r})")
        index[(i, j)] = row
    missing = [
        (axis1[i], axis2[j])
        for i in range(axis1.size)
        for j in range(axis2.size)
        if (i, j) not in index
    ]
    if missing:
        shown = ", ".join(f"({a:.6g}, {b:.6g})" for a, b in missing[:5])
        raise IngestionError(
            f"measurement grid is missing {len(missing)} setting(s): {shown}"
            + (", ..." if len(missing) > 5 else "")
        )
    s1 = _steps_on_axis(kick.dv1, step1, "dv1")
    s2 = _steps_on_axis(kick.dv2, step2, "dv2")

    feats, targs = [], []
    dropped = 0
    for i in range(axis1.size):
        for j in range(axis2.size):
            pi, pj = i + s1, j + s2
            if pi >= axis1.size or pj >= axis2.size:
                dropped += 1
                continue
            feats.append(np.concatenate([probs[index[(i, j)]], probs[index[(pi, pj)]]]))
            targs.append([axis1[i], axis2[j], axis1[pi], axis2[pj]])
    if not feats:
        raise IngestionError("kick larger than the measured grid; no examples remain")
    dataset = Dataset(
        features=np.array(feats),
        targets=np.array(targs),
        kick=kick,
        provenance="experimental",
        mean_total=None,
    )
    return dataset, dropped
