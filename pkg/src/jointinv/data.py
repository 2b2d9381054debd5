"""Synthetic surveys, well sampling, patch extraction, scaling and grid files.

Synthetic seismic is produced by 1-D convolutional modelling: impedance to
normal-incidence reflectivity, convolved with a Ricker wavelet, plus white
noise. Grids are stored as ``SGRD1`` files (see :func:`write_grid`).
"""

import math
import struct
from dataclasses import asdict, dataclass, replace

import numpy as np

from .model import ConfigError


class DataError(ValueError):
    """Invalid data values (non-positive impedance, constant data, ...)."""


class GridFormatError(ValueError):
    """Malformed SGRD1 file."""


@dataclass
class SectionGrid:
    """Depth x trace grid; column ``j`` is trace ``j``."""

    values: np.ndarray
    dz: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            raise DataError(f"grid must be 2-D and non-empty, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DataError("grid contains non-finite values")
        self.dz = float(self.dz)

    @property
    def depth_samples(self):
        return self.values.shape[0]

    @property
    def n_traces(self):
        return self.values.shape[1]

    def trace(self, j):
        return self.values[:, j]


@dataclass
class SyntheticSpec:
    depth_samples: int = 64
    n_traces: int = 200
    n_layers: int = 12
    impedance_min: float = 4000.0
    impedance_max: float = 9000.0
    impedance_jitter: float = 0.15
    dip: float = 0.05
    fault_offset: float = 0.0
    fault_position: float = 0.6
    smoothness: float = 3.0
    frequency: float = 20.0
    dt: float = 0.004
    noise_std: float = 0.0
    polarity: float = 1.0
    dz: float = 10.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.depth_samples < 2 or self.n_traces < 1 or self.n_layers < 1:
            raise ConfigError("depth_samples >= 2, n_traces >= 1 and n_layers >= 1 required")
        if not (0 < self.impedance_min <= self.impedance_max):
            raise ConfigError("impedance range must be positive and ordered")
        if not self.frequency > 0 or not self.dt > 0:
            raise ConfigError("frequency and dt must be positive")
        if self.noise_std < 0 or self.impedance_jitter < 0 or self.smoothness < 0:
            raise ConfigError("noise_std, impedance_jitter and smoothness must be >= 0")
        if self.polarity not in (1.0, -1.0, 1, -1):
            raise ConfigError("polarity must be +1 or -1")

    def to_dict(self):
        return asdict(self)


# -- forward modelling ----------------------------------------------------------

def ricker(f, dt, half_len):
    """Zero-phase Ricker wavelet sampled at t = k*dt, k in [-half_len, half_len]."""
    if not f > 0 or not dt > 0:
        raise ValueError("frequency and dt must be positive")
    t = np.arange(-half_len, half_len + 1) * dt
    a = (math.pi * f * t) ** 2
    return (1.0 - 2.0 * a) * np.exp(-a)


def wavelet_half_length(f, dt):
    # ~1.5 periods each side; the wavelet is below 1e-6 of its peak there
    return max(1, int(math.ceil(1.5 / (f * dt))))


def impedance_to_reflectivity(trace):
    trace = np.asarray(trace, dtype=np.float64)
    if np.any(trace <= 0):
        raise DataError("impedance must be positive everywhere")
    return (trace[1:] - trace[:-1]) / (trace[1:] + trace[:-1])


def convolve_same(r, w):
    """Centred convolution with an odd-length wavelet; output length len(r)."""
    h = (len(w) - 1) // 2
    return np.convolve(r, w, mode="full")[h:h + len(r)]


def forward_model(impedance, spec):
    """Seismic grid for an impedance grid: reflectivity * wavelet + noise.

    Reflectivity has d-1 samples; a zero is appended so the seismic keeps
    depth d. Noise for trace j comes from a generator seeded by
    (spec.seed, j).
    """
    w = spec.polarity * ricker(spec.frequency, spec.dt, wavelet_half_length(spec.frequency, spec.dt))
    d, n = impedance.values.shape
    out = np.zeros((d, n))
    for j in range(n):
        r = impedance_to_reflectivity(impedance.values[:, j])
        s = convolve_same(r, w)
        if spec.noise_std > 0:
            s = s + np.random.default_rng([int(spec.seed), 7, j]).normal(0.0, spec.noise_std, size=s.shape)
        out[:-1, j] = s
    return SectionGrid(out, impedance.dz)


# -- synthetic impedance models -------------------------------------------------

def _layer_impedances(spec, rng):
    k = spec.n_layers
    if k == 1:
        return np.array([0.5 * (spec.impedance_min + spec.impedance_max)])
    base = np.linspace(spec.impedance_min, spec.impedance_max, k)
    jitter = rng.uniform(-1.0, 1.0, size=k) * spec.impedance_jitter * (spec.impedance_max - spec.impedance_min)
    vals = base + jitter
    return np.clip(vals, spec.impedance_min, spec.impedance_max)


def impedance_model(spec):
    """Layered impedance section with dip, smooth undulation and one fault.

    Interfaces are horizons at random depths; each is tilted by ``dip``
    (samples per trace), undulated by a random smooth curve of amplitude
    ``smoothness`` samples and shifted by ``fault_offset`` samples to the
    right of ``fault_position`` (fraction of the section width).
    """
    rng = np.random.default_rng([int(spec.seed), 1])
    d, n, k = spec.depth_samples, spec.n_traces, spec.n_layers
    imps = _layer_impedances(spec, rng)
    if k == 1:
        return SectionGrid(np.full((d, n), imps[0]), spec.dz)
    # interface depths spread over the section with random spacing
    gaps = rng.uniform(0.5, 1.5, size=k)
    tops = np.cumsum(gaps)[:-1] / gaps.sum() * d
    x = np.arange(n) - (n - 1) / 2.0
    u = x / max(n - 1, 1)
    bumps = np.zeros((k - 1, n))
    for h in range(k - 1):
        phase = rng.uniform(0, 2 * np.pi, size=3)
        freq = np.array([1.0, 2.0, 3.0])
        amp = rng.normal(0, 1, size=3) / freq
        bumps[h] = spec.smoothness * np.sum(amp[:, None] * np.sin(2 * np.pi * freq[:, None] * u + phase[:, None]), axis=0) / 1.5
    fault = np.where(np.arange(n) >= spec.fault_position * n, spec.fault_offset, 0.0)
    horizons = tops[:, None] + spec.dip * x[None, :] + bumps + fault[None, :]
    z = np.arange(d)[:, None] + 0.5
    layer = np.zeros((d, n), dtype=int)
    for h in range(k - 1):
        layer += (z >= horizons[h][None, :]).astype(int)
    return SectionGrid(imps[layer], spec.dz)


def unrelated_variant(spec):
    """A survey spec whose physics and stratigraphy disagree with ``spec``:
    reversed wavelet polarity, impedance decreasing with depth in a disjoint
    range, and a different wavelet frequency."""
    span = spec.impedance_max - spec.impedance_min
    lo = spec.impedance_max + 0.5 * span + 1000.0
    return replace(spec, polarity=-spec.polarity, impedance_min=lo, impedance_max=lo + span,
                   frequency=spec.frequency * 1.6)


@dataclass
class Survey:
    impedance: SectionGrid
    seismic: SectionGrid
    spec: SyntheticSpec


def make_survey(spec, decreasing=False):
    imp = impedance_model(spec)
    if decreasing:
        v = imp.values
        imp = SectionGrid(spec.impedance_min + spec.impedance_max - v, imp.dz)
    return Survey(imp, forward_model(imp, spec), spec)


def make_scenario(spec_1, spec_2, related=True):
    """Two synthetic surveys.

    With ``related`` both follow their own specs (which normally share layer
    statistics and wavelet). Otherwise survey 2 is turned into
    :func:`unrelated_variant` of itself and its impedance trend is reversed.
    """
    s1 = make_survey(spec_1)
    if related:
        s2 = make_survey(spec_2)
    else:
        s2 = make_survey(unrelated_variant(spec_2), decreasing=True)
    return s1, s2


def default_specs(seed=0):
    """Stand-ins for a well-sampled survey and a structurally harder, sparser
    one, recorded with the same noise level."""
    s1 = SyntheticSpec(n_traces=255, n_layers=14, dip=0.03, fault_offset=0.0,
                       smoothness=3.0, noise_std=0.01, seed=2 * seed + 1)
    s2 = SyntheticSpec(n_traces=200, n_layers=14, dip=-0.04, fault_offset=6.0,
                       smoothness=4.0, noise_std=0.01, seed=2 * seed + 2)
    return s1, s2


def wasserstein_1d(a, b):
    """Earth mover's distance between two empirical distributions."""
    a = np.sort(np.ravel(a))
    b = np.sort(np.ravel(b))
    qs = np.linspace(0, 1, 1001)[1:-1]
    return float(np.mean(np.abs(np.quantile(a, qs) - np.quantile(b, qs))))


# -- wells, patches, scaling ------------------------------------------------------

def sample_wells(n_traces, n):
    """``n`` evenly spaced trace indices across ``n_traces`` traces."""
    if isinstance(n_traces, SectionGrid):
        n_traces = n_traces.n_traces
    if not 1 <= n <= n_traces:
        raise DataError(f"cannot place {n} wells on {n_traces} traces")
    if n == 1:
        return np.array([n_traces // 2])
    k = np.arange(n)
    # round half up, so results do not depend on banker's rounding
    return np.floor(k * (n_traces - 1) / (n - 1) + 0.5).astype(int)


def extract_patch(seismic, well, m):
    """[1, d, m] patch centred on trace ``well``; edge traces are replicated."""
    if m < 1 or m % 2 == 0:
        raise DataError(f"patch width must be odd, got {m}")
    values = seismic.values if isinstance(seismic, SectionGrid) else np.asarray(seismic)
    n = values.shape[1]
    half = (m - 1) // 2
    cols = np.clip(np.arange(well - half, well + half + 1), 0, n - 1)
    return values[:, cols][None, :, :].copy()


def extract_patches(seismic, wells, m):
    return np.stack([extract_patch(seismic, w, m) for w in wells])


@dataclass(frozen=True)
class Scaler:
    mean: float
    std: float

    @classmethod
    def fit(cls, values):
        values = np.asarray(values, dtype=np.float64)
        std = float(values.std())
        if not std > 1e-12:
            raise DataError("data is (near) constant; cannot standardize")
        return cls(float(values.mean()), std)

    def transform(self, values):
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def inverse(self, values):
        return np.asarray(values, dtype=np.float64) * self.std + self.mean


def standardize(values, scaler):
    return scaler.transform(values)


def destandardize(values, scaler):
    return scaler.inverse(values)


@dataclass
class Dataset:
    """Standardized training pairs at well positions.

    X is [N, 1, d, m], Y is [N, d]. ``scaler_x`` is fitted on the full
    seismic section, ``scaler_y`` on the training well traces only.
    """

    X: np.ndarray
    Y: np.ndarray
    well_indices: np.ndarray
    scaler_x: Scaler
    scaler_y: Scaler

    def __len__(self):
        return len(self.X)


def build_dataset(seismic, impedance, wells, m, scaler_x=None, scaler_y=None):
    wells = np.asarray(wells, dtype=int)
    if seismic.values.shape != impedance.values.shape:
        raise DataError("seismic and impedance grids differ in shape")
    if scaler_x is None:
        scaler_x = Scaler.fit(seismic.values)
    Y_raw = impedance.values[:, wells].T
    if scaler_y is None:
        scaler_y = Scaler.fit(Y_raw)
    X = scaler_x.transform(extract_patches(seismic, wells, m))
    Y = scaler_y.transform(Y_raw)
    return Dataset(X, Y, wells, scaler_x, scaler_y)


# -- SGRD1 files ------------------------------------------------------------------

GRID_MAGIC = b"SGRD1\0"
_GRID_HEAD = struct.Struct("<IId")


def grid_to_bytes(grid):
    d, n = grid.values.shape
    body = np.ascontiguousarray(grid.values.T, dtype="<f8").tobytes()
    return GRID_MAGIC + _GRID_HEAD.pack(d, n, grid.dz) + body


def grid_from_bytes(buf):
    if buf[:len(GRID_MAGIC)] != GRID_MAGIC:
        raise GridFormatError("bad magic; not an SGRD1 file")
    off = len(GRID_MAGIC)
    if len(buf) < off + _GRID_HEAD.size:
        raise GridFormatError("truncated header")
    d, n, dz = _GRID_HEAD.unpack_from(buf, off)
    off += _GRID_HEAD.size
    if d < 1 or n < 1:
        raise GridFormatError("grid extents must be positive")
    if len(buf) != off + 8 * d * n:
        raise GridFormatError(f"expected {8 * d * n} bytes of values, found {len(buf) - off}")
    vals = np.frombuffer(buf, dtype="<f8", offset=off).reshape(n, d).T.astype(np.float64)
    try:
        return SectionGrid(vals, dz)
    except DataError as exc:
        raise GridFormatError(str(exc)) from exc


def write_grid(path, grid):
    """Write ``grid`` as SGRD1: magic, u32 d, u32 n_traces, f64 dz, then
    d*n_traces little-endian f64 values trace by trace."""
    with open(path, "wb") as fh:
        fh.write(grid_to_bytes(grid))


def read_grid(path):
    with open(path, "rb") as fh:
        return grid_from_bytes(fh.read())
