"""Device configuration: defaults, validation, and the text file format.

The config file is plain key-value text, one `key = values` pair per
line, `#` comments allowed.  Matrices are flattened row-major:

    # two-phase interferometer, simulated reference device
    resistances = 100.0, 100.0
    alpha       = 6.0, 3.0, 3.0, 6.0
    alpha_nl    = 2.7, 1.35, 1.35, 2.7
    v_min       = 0.0
    v_max       = 8.0
    mean_total  = 1000.0
    # optional fabricated-tritter override, 9 complex entries
    # row-major with re/im interleaved (18 reals):
    # tritter = re00, im00, re01, im01, ...

If `--device-config` is not given on the command line, the file
`device.cfg` inside the directory named by the environment variable
TRICALIB_CONFIG_DIR is used when present, otherwise the built-in
defaults above.
"""

import os
from dataclasses import dataclass

import numpy as np

from .device import ResponseCoefficients
from .errors import FileFormatError, InvalidParameterError

__all__ = [
    "DeviceConfig",
    "default_device_config",
    "read_device_config",
    "write_device_config",
    "resolve_device_config",
    "CONFIG_DIR_ENV",
    "CONFIG_FILE_NAME",
    "GRID_V_MIN",
    "GRID_V_MAX",
    "GRID_N",
    "KICK_STEPS",
]

CONFIG_DIR_ENV = "TRICALIB_CONFIG_DIR"
CONFIG_FILE_NAME = "device.cfg"

# Default acquisition grid.  The device itself can be driven over its
# full [v_min, v_max]; the grid leaves headroom at the top so kicked
# settings stay simulable, and starts at 1 V because the phase response
# goes flat as v -> 0 (sensitivity scales with v), which would put an
# uninformative dead zone in the training data.
GRID_V_MIN = 1.0
GRID_V_MAX = 7.0
GRID_N = 53
KICK_STEPS = 5

_KEYS = ("resistances", "alpha", "alpha_nl", "v_min", "v_max", "mean_total", "tritter")


@dataclass(frozen=True)
class DeviceConfig:
    """Response coefficients plus the operating envelope of the device."""

    coeffs: ResponseCoefficients
    v_min: float = 0.0
    v_max: float = 8.0
    mean_total: float = 1000.0
    tritter: np.ndarray | None = None

    def __post_init__(self):
        if not (np.isfinite(self.v_min) and np.isfinite(self.v_max)):
            raise InvalidParameterError("voltage range must be finite")
        if self.v_min < 0.0 or self.v_max <= self.v_min:
            raise InvalidParameterError("voltage range must satisfy 0 <= v_min < v_max")
        if not np.isfinite(self.mean_total) or self.mean_total <= 0.0:
            raise InvalidParameterError("mean_total must be positive")
        if self.tritter is not None:
            t = np.asarray(self.tritter, dtype=complex)
            if t.shape != (3, 3):
                raise InvalidParameterError("tritter override must be a 3x3 matrix")
            if np.abs(t.conj().T @ t - np.eye(3)).max() > 1e-6:
                raise InvalidParameterError("tritter override is not unitary")
            object.__setattr__(self, "tritter", t)


def default_device_config() -> DeviceConfig:
    """Reference simulated device.

    With 100 ohm heaters and a 7 V grid ceiling each heater dissipates
    up to 0.49 W, and the coefficients below sweep each phase through
    several radians (past 2 pi once kicked settings are included).  The
    single-measurement voltage -> probability map is then strongly
    non-injective: the three-mode circuit leaves a six-element symmetry
    on the phase pair, and the quadratic response folds phase wraps on
    top of it.  That regime is what the kick augmentation exists to
    disambiguate.

    The balance of the three knobs matters more than their exact
    values.  Strong thermal crosstalk (half the direct coefficient)
    entangles the two phases so that far-apart voltage pairs rarely
    produce near-identical kicked measurement pairs, and a heavy
    quadratic term (45% of the linear one) makes the phase increment of
    a fixed voltage kick vary strongly across the range, which is what
    lets the network tell wrapped branches apart.  Both were tuned by
    measuring trained-network failure rates over seed ensembles; the
    landscape is sharp (for example, dropping the crosstalk ratio to
    0.4 roughly doubles the reachable validation error).
    """
    coeffs = ResponseCoefficients(
        alpha=np.array([[6.0, 3.0], [3.0, 6.0]]),
        alpha_nl=np.array([[2.7, 1.35], [1.35, 2.7]]),
        resistances=np.array([100.0, 100.0]),
    )
    return DeviceConfig(coeffs=coeffs, v_min=0.0, v_max=8.0, mean_total=1000.0)


def _parse_floats(text: str, lineno: int):
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise FileFormatError(f"expected numbers, got {text!r}", line=lineno) from exc


def read_device_config(path) -> DeviceConfig:
    """Parse a device config file; unknown keys are rejected."""
    values: dict[str, list[float]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FileFormatError("expected 'key = values'", line=lineno)
            key, _, rest = line.partition("=")
            key = key.strip()
            if key not in _KEYS:
                raise FileFormatError(f"unknown key {key!r}", line=lineno)
            if key in values:
                raise FileFormatError(f"duplicate key {key!r}", line=lineno)
            values[key] = _parse_floats(rest.strip(), lineno)

    def need(key, count):
        if key not in values:
            raise FileFormatError(f"missing required key {key!r} in {path}")
        if len(values[key]) != count:
            raise FileFormatError(f"key {key!r} needs {count} value(s), got {len(values[key])}")
        return values[key]

    coeffs = ResponseCoefficients(
        alpha=np.array(need("alpha", 4)).reshape(2, 2),
        alpha_nl=np.array(need("alpha_nl", 4)).reshape(2, 2),
        resistances=np.array(need("resistances", 2)),
    )
    tritter = None
    if "tritter" in values:
        flat = need("tritter", 18)
        re = np.array(flat[0::2]).reshape(3, 3)
        im = np.array(flat[1::2]).reshape(3, 3)
        tritter = re + 1j * im
    return DeviceConfig(
        coeffs=coeffs,
        v_min=need("v_min", 1)[0],
        v_max=need("v_max", 1)[0],
        mean_total=need("mean_total", 1)[0],
        tritter=tritter,
    )


def _fmt(values) -> str:
    return ", ".join(repr(float(x)) for x in np.asarray(values, dtype=float).ravel())


def write_device_config(cfg: DeviceConfig, path):
    lines = [
        "# tricalib device configuration",
        f"resistances = {_fmt(cfg.coeffs.resistances)}",
        f"alpha = {_fmt(cfg.coeffs.alpha)}",
        f"alpha_nl = {_fmt(cfg.coeffs.alpha_nl)}",
        f"v_min = {_fmt([cfg.v_min])}",
        f"v_max = {_fmt([cfg.v_max])}",
        f"mean_total = {_fmt([cfg.mean_total])}",
    ]
    if cfg.tritter is not None:
        interleaved = np.empty(18)
        interleaved[0::2] = cfg.tritter.real.ravel()
        interleaved[1::2] = cfg.tritter.imag.ravel()
        lines.append(f"tritter = {_fmt(interleaved)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def resolve_device_config(explicit_path=None) -> DeviceConfig:
    """Config lookup order: explicit path, env directory, defaults."""
    if explicit_path is not None:
        return read_device_config(explicit_path)
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir:
        candidate = os.path.join(env_dir, CONFIG_FILE_NAME)
        if os.path.exists(candidate):
            return read_device_config(candidate)
    return default_device_config()
