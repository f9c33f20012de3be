"""Grids, kick-augmented dataset generation, splits, normalization,
CSV round-trips, and experimental ingestion."""

import numpy as np
import pytest

from tricalib.config import default_device_config
from tricalib.data import (
    Dataset,
    KickConfig,
    TargetScaling,
    build_grid,
    generate_simulated,
    ingest_experimental,
    kick_from_steps,
    normalize_targets,
    read_csv,
    read_measurement_csv,
    split,
    write_csv,
    write_measurement_csv,
)
from tricalib.device import voltage_probabilities
from tricalib.errors import (
    DegenerateDataError,
    FileFormatError,
    IngestionError,
    InvalidParameterError,
)

DEV = default_device_config()


def small_dataset(mean_total=1000.0, n=9, seed=0):
    grid = build_grid(2.0, 5.0, n)
    kick = kick_from_steps(grid, 2, 2)
    return generate_simulated(grid, kick, DEV, np.random.default_rng(seed),
                              mean_total=mean_total)


# -------------------------------------------------------------------- grids


def test_build_grid_reference_shape():
    grid = build_grid(0.0, 7.0, 53)
    assert grid.v1_values.size == 53
    assert grid.v1_values[1] - grid.v1_values[0] == pytest.approx(7.0 / 52.0)
    assert grid.settings().shape == (2809, 2)


def test_build_grid_two_points():
    grid = build_grid(0.0, 1.0, 2)
    np.testing.assert_array_equal(grid.v1_values, [0.0, 1.0])
    assert grid.settings().shape == (4, 2)


def test_build_grid_validation():
    with pytest.raises(InvalidParameterError):
        build_grid(0.0, 1.0, 1)
    with pytest.raises(InvalidParameterError):
        build_grid(2.0, 2.0, 5)
    with pytest.raises(InvalidParameterError):
        build_grid(3.0, 1.0, 5)


def test_kick_from_steps():
    grid = build_grid(1.0, 7.0, 53)
    kick = kick_from_steps(grid, 5, 5)
    step = 6.0 / 52.0
    assert kick.dv1 == pytest.approx(5 * step)
    assert kick.dv2 == pytest.approx(5 * step)


def test_zero_step_kick_rejected():
    grid = build_grid(1.0, 7.0, 10)
    with pytest.raises(InvalidParameterError):
        kick_from_steps(grid, 0, 1)
    with pytest.raises(InvalidParameterError):
        KickConfig(dv1=0.0, dv2=0.5)


# ---------------------------------------------------------------- generation


def test_generate_full_grid_shape():
    grid = build_grid(1.0, 7.0, 53)
    kick = kick_from_steps(grid, 5, 5)
    ds = generate_simulated(grid, kick, DEV, np.random.default_rng(0), mean_total=None)
    assert ds.features.shape == (2809, 12)
    assert ds.targets.shape == (2809, 4)
    assert ds.provenance == "simulated"


def test_generate_deterministic():
    a = small_dataset(seed=21)
    b = small_dataset(seed=21)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.targets, b.targets)


def test_generate_kick_targets_consistent():
    ds = small_dataset(mean_total=None)
    d1 = ds.targets[:, 2] - ds.targets[:, 0]
    d2 = ds.targets[:, 3] - ds.targets[:, 1]
    # targets are built by adding the offset in floating point, so the
    # recovered differences sit within one rounding step of the offset
    assert np.abs(d1 - ds.kick.dv1).max() < 1e-12
    assert np.abs(d2 - ds.kick.dv2).max() < 1e-12


def test_generate_rejects_out_of_range_kick():
    grid = build_grid(1.0, 7.0, 10)
    kick = KickConfig(dv1=1.5, dv2=1.5)  # 7 + 1.5 > 8
    with pytest.raises(InvalidParameterError):
        generate_simulated(grid, kick, DEV, np.random.default_rng(0))


def test_generate_replicas():
    grid = build_grid(2.0, 5.0, 4)
    kick = kick_from_steps(grid, 1, 1)
    ds = generate_simulated(grid, kick, DEV, np.random.default_rng(3),
                            mean_total=500.0, replicas=3)
    assert len(ds) == 48
    # replica blocks repeat the same targets but re-draw the noise
    assert np.array_equal(ds.targets[:16], ds.targets[16:32])
    assert not np.array_equal(ds.features[:16], ds.features[16:32])


def test_generate_noise_vanishes_at_large_counts():
    exact = small_dataset(mean_total=None, n=7, seed=1)
    noisy = small_dataset(mean_total=1e7, n=7, seed=1)
    assert np.abs(noisy.features - exact.features).max() < 1e-3


def test_generate_features_are_probabilities():
    ds = small_dataset(mean_total=200.0)
    assert ds.features.min() >= 0.0 and ds.features.max() <= 1.0
    assert np.abs(ds.features[:, 0:3].sum(axis=1) - 1.0).max() < 1e-12
    assert np.abs(ds.features[:, 3:6].sum(axis=1) - 1.0).max() < 1e-12
    assert np.abs(ds.features[:, 6:9].sum(axis=1) - 1.0).max() < 1e-12
    assert np.abs(ds.features[:, 9:12].sum(axis=1) - 1.0).max() < 1e-12


# -------------------------------------------------------------------- splits


def test_split_partition():
    ds = small_dataset(mean_total=None)
    tr, va = split(ds, 0.15, np.random.default_rng(0))
    assert len(tr) + len(va) == len(ds)
    merged = np.vstack([tr.targets, va.targets])
    assert np.array_equal(np.sort(merged, axis=0), np.sort(ds.targets, axis=0))


def test_split_reference_sizes():
    grid = build_grid(1.0, 7.0, 53)
    kick = kick_from_steps(grid, 5, 5)
    ds = generate_simulated(grid, kick, DEV, np.random.default_rng(0), mean_total=None)
    tr, va = split(ds, 0.15, np.random.default_rng(1))
    assert len(va) == 421  # round(0.15 * 2809)
    assert len(tr) == 2388


def test_split_two_examples_half():
    ds = small_dataset(mean_total=None).subset(np.array([0, 1]))
    tr, va = split(ds, 0.5, np.random.default_rng(0))
    assert len(tr) == 1 and len(va) == 1


def test_split_seed_behavior():
    ds = small_dataset(mean_total=None)
    a1, _ = split(ds, 0.2, np.random.default_rng(5))
    a2, _ = split(ds, 0.2, np.random.default_rng(5))
    assert np.array_equal(a1.targets, a2.targets)
    # ten different seeds give ten different partitions
    fronts = [split(ds, 0.2, np.random.default_rng(s))[0].targets[:5] for s in range(10)]
    for i in range(10):
        for j in range(i + 1, 10):
            assert not np.array_equal(fronts[i], fronts[j])


def test_split_fraction_validation():
    ds = small_dataset(mean_total=None)
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(InvalidParameterError):
            split(ds, bad, np.random.default_rng(0))


# ------------------------------------------------------------- normalization


def test_normalize_endpoints_and_inverse():
    ds = small_dataset(mean_total=None)
    scaled, scaling = normalize_targets(ds)
    assert scaled.targets.min(axis=0) == pytest.approx(np.zeros(4), abs=0)
    assert scaled.targets.max(axis=0) == pytest.approx(np.ones(4), abs=0)
    back = scaling.invert(scaled.targets)
    assert np.abs(back - ds.targets).max() < 1e-12


def test_normalization_fitted_on_train_only():
    ds = small_dataset(mean_total=None)
    tr = ds.subset(np.arange(0, len(ds) // 2))
    va = ds.subset(np.arange(len(ds) // 2, len(ds)))
    _, scaling = normalize_targets(tr)
    lo, hi = tr.targets.min(axis=0), tr.targets.max(axis=0)
    assert np.array_equal(scaling.lo, lo) and np.array_equal(scaling.hi, hi)
    # the validation split may land outside [0, 1] and that is fine
    va_scaled = scaling.transform(va.targets)
    assert va_scaled.max() > 1.0 - 1e-12


def test_normalize_constant_dimension_rejected():
    feats = np.random.default_rng(0).uniform(0, 1, size=(5, 12))
    targets = np.ones((5, 4))
    ds = Dataset(features=feats, targets=targets, kick=KickConfig(0.5, 0.5))
    with pytest.raises(DegenerateDataError):
        normalize_targets(ds)


def test_pooled_span():
    scaling = TargetScaling(lo=np.array([1.0, 1.0, 1.5, 1.5]),
                            hi=np.array([7.0, 7.0, 7.5, 7.5]))
    assert scaling.pooled_span() == 6.5


# ------------------------------------------------------------------ CSV I/O


def test_dataset_round_trip_bit_exact(tmp_path):
    ds = small_dataset(mean_total=750.0, seed=9)
    path = tmp_path / "d.csv"
    write_csv(ds, path)
    back = read_csv(path)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.targets, ds.targets)
    assert back.kick == ds.kick
    assert back.mean_total == ds.mean_total
    assert back.provenance == ds.provenance
    # and writing again produces identical bytes
    path2 = tmp_path / "d2.csv"
    write_csv(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_noise_free_metadata_round_trip(tmp_path):
    ds = small_dataset(mean_total=None)
    path = tmp_path / "d.csv"
    write_csv(ds, path)
    assert read_csv(path).mean_total is None


def test_normalized_dataset_refused(tmp_path):
    scaled, _ = normalize_targets(small_dataset(mean_total=None))
    with pytest.raises(InvalidParameterError):
        write_csv(scaled, tmp_path / "d.csv")


def corrupt(tmp_path, mutate):
    ds = small_dataset(mean_total=None, n=3)
    path = tmp_path / "d.csv"
    write_csv(ds, path)
    lines = path.read_text().splitlines()
    mutate(lines)
    path.write_text("\n".join(lines) + "\n")
    return path


def test_header_mismatch_rejected(tmp_path):
    path = corrupt(tmp_path, lambda ls: ls.__setitem__(4, ls[4].replace("v1,", "volt1,")))
    with pytest.raises(FileFormatError, match="header"):
        read_csv(path)


def test_wrong_column_count_reports_line(tmp_path):
    path = corrupt(tmp_path, lambda ls: ls.__setitem__(6, ls[6] + ",0.5"))
    with pytest.raises(FileFormatError, match="line 7"):
        read_csv(path)


def test_probability_out_of_range_rejected(tmp_path):
    def bump(ls):
        parts = ls[5].split(",")
        parts[4] = "1.5"
        ls[5] = ",".join(parts)
    path = corrupt(tmp_path, bump)
    with pytest.raises(FileFormatError, match="probability"):
        read_csv(path)


def test_non_numeric_field_rejected(tmp_path):
    def mangle(ls):
        parts = ls[5].split(",")
        parts[7] = "abc"
        ls[5] = ",".join(parts)
    path = corrupt(tmp_path, mangle)
    with pytest.raises(FileFormatError):
        read_csv(path)


def test_inconsistent_kick_rejected(tmp_path):
    def shift(ls):
        parts = ls[6].split(",")
        parts[2] = repr(float(parts[2]) + 0.05)
        ls[6] = ",".join(parts)
    path = corrupt(tmp_path, shift)
    with pytest.raises(FileFormatError, match="kick"):
        read_csv(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("")
    with pytest.raises(FileFormatError):
        read_csv(path)


def test_header_only_rejected(tmp_path):
    path = corrupt(tmp_path, lambda ls: ls.__delitem__(slice(5, None)))
    with pytest.raises(FileFormatError, match="no data rows"):
        read_csv(path)


def test_measurement_round_trip(tmp_path):
    grid = build_grid(1.0, 4.0, 6)
    settings = grid.settings()
    probs = voltage_probabilities(settings, DEV.coeffs, DEV.tritter)
    path = tmp_path / "m.csv"
    write_measurement_csv(settings, probs, path, comment="model grid")
    v, p = read_measurement_csv(path)
    assert np.array_equal(v, settings)
    assert np.array_equal(p, probs)


def test_measurement_bad_probability_rejected(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("v1,v2,p11,p12,p13,p21,p22,p23\n1.0,1.0,1.2,0.0,0.0,0.3,0.3,0.4\n")
    with pytest.raises(FileFormatError):
        read_measurement_csv(path)


# ---------------------------------------------------------------- ingestion


def measured_grid_file(tmp_path, n=50, v_lo=1.0, v_hi=6.0, name="m.csv"):
    grid = build_grid(v_lo, v_hi, n)
    settings = grid.settings()
    probs = voltage_probabilities(settings, DEV.coeffs, DEV.tritter)
    path = tmp_path / name
    write_measurement_csv(settings, probs, path)
    return path, grid


def test_ingest_pairing_counts(tmp_path):
    path, grid = measured_grid_file(tmp_path, n=50)
    kick = kick_from_steps(grid, 5, 5)
    ds, dropped = ingest_experimental(path, kick)
    assert len(ds) == 45 * 45 == 2025
    assert dropped == 2500 - 2025
    assert ds.provenance == "experimental"


def test_ingest_matches_simulation_on_grid(tmp_path):
    """Pairing grid points reproduces direct simulation of the interior."""
    path, grid = measured_grid_file(tmp_path, n=13, v_lo=1.0, v_hi=7.0)
    kick = kick_from_steps(grid, 2, 2)
    ing, _ = ingest_experimental(path, kick)
    inner = build_grid(1.0, 6.0, 11)
    ref = generate_simulated(inner, kick, DEV, np.random.default_rng(0), mean_total=None)
    oi = np.lexsort((ing.targets[:, 1], ing.targets[:, 0]))
    orf = np.lexsort((ref.targets[:, 1], ref.targets[:, 0]))
    assert np.abs(ing.targets[oi] - ref.targets[orf]).max() < 1e-12
    assert np.abs(ing.features[oi] - ref.features[orf]).max() < 1e-12


def test_ingest_kick_off_grid_rejected(tmp_path):
    path, grid = measured_grid_file(tmp_path, n=10)
    with pytest.raises(IngestionError, match="integer multiple"):
        ingest_experimental(path, KickConfig(dv1=0.3, dv2=0.3))


def test_ingest_non_rectangular_rejected(tmp_path):
    path, grid = measured_grid_file(tmp_path, n=6)
    lines = path.read_text().splitlines()
    del lines[3]  # drop one measured setting
    path.write_text("\n".join(lines) + "\n")
    kick = kick_from_steps(grid, 1, 1)
    with pytest.raises(IngestionError):
        ingest_experimental(path, kick)


def test_ingest_duplicate_setting_rejected(tmp_path):
    path, grid = measured_grid_file(tmp_path, n=6)
    lines = path.read_text().splitlines()
    lines.append(lines[2])
    path.write_text("\n".join(lines) + "\n")
    kick = kick_from_steps(grid, 1, 1)
    with pytest.raises(IngestionError):
        ingest_experimental(path, kick)


def test_ingest_kick_spanning_grid_rejected(tmp_path):
    path, grid = measured_grid_file(tmp_path, n=6)
    step = float(grid.v1_values[1] - grid.v1_values[0])
    with pytest.raises(IngestionError, match="no examples"):
        ingest_experimental(path, KickConfig(dv1=6 * step, dv2=6 * step))


def test_ingested_dataset_survives_csv_round_trip(tmp_path):
    path, grid = measured_grid_file(tmp_path, n=8)
    kick = kick_from_steps(grid, 2, 2)
    ds, _ = ingest_experimental(path, kick)
    out = tmp_path / "ingested.csv"
    write_csv(ds, out)
    back = read_csv(out)
    assert back.provenance == "experimental"
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.targets, ds.targets)
