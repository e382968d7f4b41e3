"""Far-field channel model for a uniform linear transmit array.

Synthesizes the complex gain matrix between array elements and fixed
receivers, and plays weight streams through that matrix with optional
impairments (AWGN, per-sample phase noise, receiver sampling-clock jitter,
slow inter-element drift).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an install-time dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

SPEED_OF_LIGHT = 299792458.0

MIN_SAMPLES_PER_SYMBOL = 8

# Correlation time of the receiver sampling-clock wander, in symbol periods.
JITTER_CORRELATION_SYMBOLS = 0.5


@njit(cache=True)
def _ar1(g: np.ndarray, rho: float) -> np.ndarray:  # pragma: no cover - jitted
    """Stationary unit-variance AR(1) filter along the last axis."""
    out = np.empty_like(g)
    scale = np.sqrt(1.0 - rho * rho)
    for n in range(g.shape[0]):
        acc = g[n, 0]
        out[n, 0] = acc
        for i in range(1, g.shape[1]):
            acc = rho * acc + scale * g[n, i]
            out[n, i] = acc
    return out


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions along a line, in meters, plus the carrier frequency.

    Angles elsewhere in this package are measured from endfire (the array
    axis), so a receiver at 90 degrees sits broadside.
    """

    element_positions: tuple[float, ...]
    carrier_hz: float

    def __post_init__(self) -> None:
        if len(self.element_positions) < 2:
            raise ValueError("array needs at least 2 elements")
        pos = np.asarray(self.element_positions, dtype=float)
        if not np.all(np.isfinite(pos)):
            raise ValueError("element positions must be finite")
        if np.any(np.diff(pos) <= 0):
            raise ValueError("element positions must be strictly increasing")
        if not (self.carrier_hz > 0):
            raise ValueError("carrier frequency must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def n_elements(self) -> int:
        return len(self.element_positions)


def ula(n_elements: int, carrier_hz: float, spacing_wavelengths: float = 0.5) -> ArrayGeometry:
    """Uniform linear array with the given inter-element spacing (default half wave)."""
    wl = SPEED_OF_LIGHT / carrier_hz
    positions = tuple(m * spacing_wavelengths * wl for m in range(n_elements))
    return ArrayGeometry(positions, carrier_hz)


@dataclass(frozen=True)
class ReceiverSpec:
    """One receiver: bearing from endfire (radians), slant range, linear gain."""

    angle_rad: float
    range_m: float
    gain: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.angle_rad <= np.pi):
            raise ValueError("receiver angle must lie in [0, pi]")
        if not (self.range_m > 0):
            raise ValueError("receiver range must be positive")
        if not (self.gain > 0):
            raise ValueError("receiver gain must be positive")


@dataclass(frozen=True)
class NoiseConfig:
    """Impairment knobs for propagation.

    awgn_sigma          complex-amplitude noise std per sample
    phase_noise_sigma   radians std per sample, i.i.d., per receiver
    timing_jitter       receiver sampling-clock wander std as a fraction of a
                        symbol period. Clock error is slow by nature, so it
                        is modelled per receiver as a stationary AR(1)
                        process whose correlation time is half a symbol
                        (JITTER_CORRELATION_SYMBOLS), not as white noise.
    drift_rate          radians/second of slow rotation applied to element 2's
                        column relative to element 1
    seed                base seed; identical seed and inputs give bit-identical
                        output
    """

    awgn_sigma: float = 0.0
    phase_noise_sigma: float = 0.0
    timing_jitter: float = 0.0
    drift_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("awgn_sigma", "phase_noise_sigma", "timing_jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def is_noiseless(self) -> bool:
        return self.awgn_sigma == 0 and self.phase_noise_sigma == 0 and self.timing_jitter == 0

    def with_seed(self, seed: int) -> "NoiseConfig":
        return NoiseConfig(self.awgn_sigma, self.phase_noise_sigma,
                           self.timing_jitter, self.drift_rate, seed)


NOISELESS = NoiseConfig()


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex gains from each element (column) to each receiver (row)."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.entries, dtype=complex)
        if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 2:
            raise ValueError("channel matrix must be N x M with N >= 1, M >= 2")
        if not np.all(np.isfinite(h)):
            raise ValueError("channel matrix entries must be finite")
        object.__setattr__(self, "entries", h)

    @property
    def n_receivers(self) -> int:
        return self.entries.shape[0]

    @property
    def n_elements(self) -> int:
        return self.entries.shape[1]


def as_channel(h: ChannelMatrix | np.ndarray) -> ChannelMatrix:
    return h if isinstance(h, ChannelMatrix) else ChannelMatrix(np.asarray(h, dtype=complex))


@dataclass(frozen=True)
class WeightStream:
    """Per-symbol element excitation vectors and the symbol period."""

    vectors: np.ndarray  # (n_symbols, n_elements) complex
    symbol_duration: float

    def __post_init__(self) -> None:
        v = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        if v.shape[0] < 1:
            raise ValueError("weight stream needs at least one symbol")
        if not (self.symbol_duration > 0):
            raise ValueError("symbol duration must be positive")
        object.__setattr__(self, "vectors", v)

    @property
    def n_symbols(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_elements(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class RxSampleStream:
    """Complex baseband samples observed at each receiver (rows)."""

    samples: np.ndarray  # (n_receivers, n_samples) complex
    sample_rate: float
    start_time: float = 0.0

    @property
    def n_receivers(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.samples.shape[1]) / self.sample_rate


def synth_channel(geometry: ArrayGeometry, receivers: list[ReceiverSpec] | tuple[ReceiverSpec, ...]) -> ChannelMatrix:
    """Far-field gain matrix.

    Entry (n, m) is (g_n / r_n) * exp(-j 2 pi (r_n - x_m cos theta_n) / lambda):
    spherical spreading to the receiver plus the plane-wave path difference
    across the aperture.
    """
    if len(receivers) < 1:
        raise ValueError("need at least one receiver")
    wl = geometry.wavelength
    x = np.asarray(geometry.element_positions, dtype=float)
    rows = []
    for rx in receivers:
        path = rx.range_m - x * np.cos(rx.angle_rad)
        rows.append((rx.gain / rx.range_m) * np.exp(-2j * np.pi * path / wl))
    return ChannelMatrix(np.asarray(rows, dtype=complex))


def _drifted_column_factor(drift_rate: float, times: np.ndarray) -> np.ndarray:
    return np.exp(-1j * drift_rate * times)


def propagate(h: ChannelMatrix | np.ndarray,
              weights: WeightStream,
              noise: NoiseConfig = NOISELESS,
              sample_rate: float = 8000.0,
              start_time: float = 0.0) -> RxSampleStream:
    """Play a weight stream through the channel and sample each receiver.

    Each symbol holds its weight vector for weights.symbol_duration seconds.
    Per sample at absolute time t, receiver n observes
    sum_m h_nm(t) w_m(k(t)) with drift applied to column 2, then per-sample
    phase noise and complex AWGN. Sampling-clock jitter perturbs which symbol
    each receiver reads, not the time used for drift.
    """
    h = as_channel(h).entries
    n_rx, n_el = h.shape
    if weights.n_elements != n_el:
        raise ValueError(f"weight vectors have {weights.n_elements} elements, channel has {n_el}")
    sps = weights.symbol_duration * sample_rate
    samples_per_symbol = int(round(sps))
    if samples_per_symbol < MIN_SAMPLES_PER_SYMBOL:
        raise ValueError(f"sample_rate must give at least {MIN_SAMPLES_PER_SYMBOL} samples per symbol")
    if abs(sps - samples_per_symbol) > 1e-9:
        raise ValueError("symbol duration must be an integer number of samples")

    n_sym = weights.n_symbols
    n_samples = n_sym * samples_per_symbol
    rel_t = np.arange(n_samples) / sample_rate
    times = start_time + rel_t

    rng = np.random.Generator(np.random.PCG64(noise.seed))
    # Fixed draw order keeps outputs bit-identical for a given seed:
    # jitter, phase noise, AWGN.
    if noise.timing_jitter > 0:
        g = rng.normal(0.0, 1.0, size=(n_rx, n_samples))
        rho = np.exp(-1.0 / (JITTER_CORRELATION_SYMBOLS * samples_per_symbol))
        jitter = (noise.timing_jitter * weights.symbol_duration) * _ar1(g, rho)
    else:
        jitter = None
    if noise.phase_noise_sigma > 0:
        phase_noise = rng.normal(0.0, noise.phase_noise_sigma, size=(n_rx, n_samples))
    else:
        phase_noise = None
    if noise.awgn_sigma > 0:
        g = rng.standard_normal(size=(n_rx, n_samples, 2))
        awgn = (noise.awgn_sigma / np.sqrt(2.0)) * (g[..., 0] + 1j * g[..., 1])
    else:
        awgn = None

    base_idx = np.repeat(np.arange(n_sym), samples_per_symbol)
    out = np.empty((n_rx, n_samples), dtype=complex)
    col2 = (_drifted_column_factor(noise.drift_rate, times)
            if noise.drift_rate != 0.0 else None)
    for n in range(n_rx):
        if jitter is not None:
            eff = np.floor((rel_t + jitter[n]) / weights.symbol_duration).astype(np.int64)
            sym_idx = np.clip(eff, 0, n_sym - 1)
        else:
            sym_idx = base_idx
        w = weights.vectors[sym_idx]  # (n_samples, n_elements)
        acc = w @ h[n]
        if col2 is not None:
            acc += w[:, 1] * h[n, 1] * (col2 - 1.0)
        if phase_noise is not None:
            acc = acc * np.exp(1j * phase_noise[n])
        if awgn is not None:
            acc = acc + awgn[n]
        out[n] = acc
    return RxSampleStream(out, sample_rate, start_time)
