"""Differential phase-shift keying over measured phase traces.

Data rides on phase increments between consecutive symbols, never on
absolute phase, so any constant per-receiver rotation (including the one an
amplitude-only calibration cannot see) is invisible. Increments are odd
multiples of pi/2^B, Gray-labelled, so there is no zero increment: every
symbol produces a transition the asynchronous detector can find.

Two detectors are provided. sync_detect knows the symbol boundaries and
averages each interval (the lab baseline). async_detect recovers symbols
from the trace alone by flagging phase excursions that persist; its failure
mode under jitter is the extra, inserted symbol that shifts every later bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an install-time dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# Comparison slack for transitions that sit exactly at threshold (clean
# traces put minimum-size increments there to the last float bit).
THRESHOLD_EPS = 1e-9


class ModemError(ValueError):
    pass


class NonAscii(ModemError):
    """Text contains a character outside 7-bit ASCII."""


class EmptyInterval(ModemError):
    """A symbol interval contains no trace samples."""


def wrap_phase(phi):
    """Wrap radians to (-pi, pi]."""
    w = np.mod(np.asarray(phi, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    if w.ndim == 0:
        return float(np.pi) if w == -np.pi else float(w)
    w[w == -np.pi] = np.pi
    return w


@dataclass(frozen=True)
class DpskConfig:
    """Modulation order, symbol rate and the reference phase."""

    bits_per_symbol: int = 1
    symbol_rate: float = 1000.0
    initial_phase: float = 0.0

    def __post_init__(self) -> None:
        if self.bits_per_symbol not in (1, 2, 3, 4):
            raise ValueError("bits_per_symbol must be 1..4")
        if not (self.symbol_rate > 0):
            raise ValueError("symbol_rate must be positive")

    @property
    def symbol_duration(self) -> float:
        return 1.0 / self.symbol_rate


@dataclass(frozen=True)
class DetectorConfig:
    """Asynchronous transition detector knobs.

    transition_threshold defaults to half the constellation spacing,
    pi/2^B, resolved when the modulation order is known. confirmation_window
    counts consecutive qualifying samples before an event is accepted;
    refractory suppresses further events for that fraction of a symbol.
    """

    transition_threshold: float | None = None
    confirmation_window: int = 3
    refractory: float = 0.5

    def __post_init__(self) -> None:
        if self.transition_threshold is not None and self.transition_threshold <= 0:
            raise ValueError("transition_threshold must be positive")
        if self.confirmation_window < 1:
            raise ValueError("confirmation_window must be at least 1")
        if not (0 <= self.refractory < 1):
            raise ValueError("refractory must lie in [0, 1)")

    def threshold_for(self, bits_per_symbol: int) -> float:
        if self.transition_threshold is not None:
            return self.transition_threshold
        return np.pi / (1 << bits_per_symbol)


@dataclass(frozen=True)
class BitStream:
    """Ordered bits plus framing metadata."""

    bits: np.ndarray
    boundaries: tuple[int, ...] = (0,)
    padding: int = 0

    def __post_init__(self) -> None:
        b = np.asarray(self.bits, dtype=np.uint8).reshape(-1)
        if b.size and not np.all((b == 0) | (b == 1)):
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", b)

    def __len__(self) -> int:
        return int(self.bits.size)


@dataclass(frozen=True)
class PhaseTrace:
    """Unwrapped measured phase against time for one receiver."""

    times: np.ndarray
    phases: np.ndarray
    receiver: int = 0

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.phases, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise ValueError("times and phases must be equal-length 1-D arrays")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "phases", p)

    @property
    def sample_rate(self) -> float:
        if self.times.size < 2:
            raise ValueError("trace too short to infer a sample rate")
        return 1.0 / float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class DecodedText:
    """Characters recovered from a bit stream plus framing leftovers."""

    text: str
    dropped_bits: int
    stripped_padding: int


@lru_cache(maxsize=None)
def constellation(bits_per_symbol: int) -> tuple[tuple[float, int], ...]:
    """(increment, Gray label) pairs, enumerated counter-clockwise.

    Increments are the odd multiples of pi/2^B starting at +pi/2^B, labelled
    with the binary-reflected Gray code so neighbours differ in one bit.
    B = 1 keeps the documented polarity: bit 1 -> +pi/2, bit 0 -> -pi/2.
    """
    if bits_per_symbol not in (1, 2, 3, 4):
        raise ValueError("bits_per_symbol must be 1..4")
    b = bits_per_symbol
    size = 1 << b
    base = np.pi / size
    incs = [wrap_phase(base + i * 2.0 * base) for i in range(size)]
    labels = [i ^ (i >> 1) for i in range(size)]
    if b == 1:
        labels = [1, 0]
    return tuple(zip(incs, labels))


def _label_to_index(bits_per_symbol: int) -> dict[int, int]:
    return {label: i for i, (_, label) in enumerate(constellation(bits_per_symbol))}


def encode_ascii(text: str) -> BitStream:
    """Characters to bits, 8 per character, MSB first."""
    for ch in text:
        if ord(ch) > 127:
            raise NonAscii(f"character {ch!r} is not 7-bit ASCII")
    data = np.frombuffer(text.encode("ascii"), dtype=np.uint8)
    return BitStream(np.unpackbits(data))


def decode_ascii(bits: BitStream | np.ndarray) -> DecodedText:
    """Bits to characters, 8 MSB-first per character.

    A trailing group shorter than 8 bits is dropped and reported; trailing
    NUL characters are stripped and reported as padding.
    """
    b = bits.bits if isinstance(bits, BitStream) else np.asarray(bits, dtype=np.uint8)
    dropped = int(b.size % 8)
    usable = b[:b.size - dropped] if dropped else b
    chars = np.packbits(usable.astype(np.uint8)) if usable.size else np.array([], dtype=np.uint8)
    raw = "".join(chr(int(c)) for c in chars)
    text = raw.rstrip("\x00")
    return DecodedText(text=text, dropped_bits=dropped,
                       stripped_padding=len(raw) - len(text))


def pad_messages(texts: list[str] | tuple[str, ...], pad_char: str = "\x00") -> list[str]:
    """Pad every text with NULs to the length of the longest."""
    if not texts:
        return []
    longest = max(len(t) for t in texts)
    return [t + pad_char * (longest - len(t)) for t in texts]


def symbol_pad_bits(n_bits: int, bits_per_symbol: int) -> int:
    """Zero bits appended so the count divides the modulation order."""
    return (-n_bits) % bits_per_symbol


def dpsk_modulate(bits: BitStream | np.ndarray, config: DpskConfig) -> np.ndarray:
    """Accumulated symbol phases, reference first.

    Returns K+1 phases for K = ceil(n_bits / B) data symbols; phases
    accumulate without wrapping (wrap only on export).
    """
    b = bits.bits if isinstance(bits, BitStream) else np.asarray(bits, dtype=np.uint8).reshape(-1)
    B = config.bits_per_symbol
    pad = symbol_pad_bits(b.size, B)
    if pad:
        b = np.concatenate([b, np.zeros(pad, dtype=np.uint8)])
    groups = b.reshape(-1, B)
    weights = 1 << np.arange(B - 1, -1, -1)
    labels = groups @ weights
    lookup = _label_to_index(B)
    incs = np.array([inc for inc, _ in constellation(B)])
    idx = np.array([lookup[int(v)] for v in labels], dtype=np.int64)
    phases = np.empty(idx.size + 1, dtype=float)
    phases[0] = config.initial_phase
    np.cumsum(incs[idx], out=phases[1:])
    phases[1:] += config.initial_phase
    return phases


def trace_from_stream(stream, receiver: int | None = None) -> list[PhaseTrace]:
    """Unwrapped phase traces, one per receiver, from a sample stream."""
    times = stream.times
    traces = []
    rx_set = range(stream.n_receivers) if receiver is None else [receiver]
    for n in rx_set:
        phases = np.unwrap(np.angle(stream.samples[n]))
        traces.append(PhaseTrace(times=times, phases=phases, receiver=n))
    return traces


def uniform_boundaries(n_samples: int, n_intervals: int) -> np.ndarray:
    """Interval edge indices for evenly spaced symbols."""
    if n_intervals < 1:
        raise ValueError("need at least one interval")
    return np.round(np.linspace(0, n_samples, n_intervals + 1)).astype(np.int64)


def _decode_increments(dphi: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Nearest-increment decisions to bits; ties go to the lowest index."""
    table = constellation(bits_per_symbol)
    incs = np.array([inc for inc, _ in table])
    labels = np.array([label for _, label in table], dtype=np.int64)
    d = wrap_phase(np.atleast_1d(dphi))
    dist = np.abs(wrap_phase(d[:, None] - incs[None, :]))
    chosen = labels[np.argmin(dist, axis=1)]
    B = bits_per_symbol
    shifts = np.arange(B - 1, -1, -1)
    bits = ((chosen[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    return bits.reshape(-1)


def sync_detect(trace: PhaseTrace, config: DpskConfig,
                boundaries: np.ndarray) -> BitStream:
    """Decode with known symbol boundaries.

    The phase of interval k is the circular mean of its samples; each
    difference between consecutive intervals decodes to the nearest
    constellation increment.
    """
    edges = np.asarray(boundaries, dtype=np.int64)
    if edges.size < 2:
        raise ValueError("need at least two boundary indices")
    phasors = np.exp(1j * trace.phases)
    csum = np.concatenate([[0.0 + 0.0j], np.cumsum(phasors)])
    widths = np.diff(edges)
    if np.any(widths <= 0):
        k = int(np.argmin(widths))
        raise EmptyInterval(f"symbol interval {k} contains no samples")
    sums = csum[edges[1:]] - csum[edges[:-1]]
    means = np.angle(sums)
    dphi = wrap_phase(np.diff(means))
    return BitStream(_decode_increments(dphi, config.bits_per_symbol))


@njit(cache=True)
def _scan_transitions(phases, threshold, window, refractory_samples):  # pragma: no cover - jitted
    n = phases.shape[0]
    ev_dphi = np.empty(n, dtype=np.float64)
    ev_idx = np.empty(n, dtype=np.int64)
    n_events = 0
    ref = phases[0]
    count = 0
    guard_until = 0
    thr = threshold - THRESHOLD_EPS
    for i in range(1, n):
        if i < guard_until:
            continue
        if abs(phases[i] - ref) >= thr:
            count += 1
            if count >= window:
                ev_dphi[n_events] = phases[i] - ref
                ev_idx[n_events] = i
                n_events += 1
                ref = phases[i]
                guard_until = i + 1 + refractory_samples
                count = 0
        else:
            count = 0
    return ev_idx[:n_events], ev_dphi[:n_events]


def async_detect(trace: PhaseTrace, config: DpskConfig,
                 detector: DetectorConfig = DetectorConfig()) -> BitStream:
    """Decode from the trace alone, without symbol timing.

    A symbol event fires when the phase change since the last accepted event
    stays at or beyond the threshold for confirmation_window consecutive
    samples; afterwards events are suppressed for the refractory span. Each
    event's total phase change decodes to the nearest increment. The output
    length reflects what was detected, which under noise and jitter can be
    longer (inserted symbols) or shorter than what was sent.
    """
    sample_rate = trace.sample_rate
    samples_per_symbol = sample_rate / config.symbol_rate
    refractory_samples = int(round(detector.refractory * samples_per_symbol))
    threshold = detector.threshold_for(config.bits_per_symbol)
    _, dphi = _scan_transitions(np.ascontiguousarray(trace.phases, dtype=np.float64),
                                float(threshold),
                                int(detector.confirmation_window),
                                refractory_samples)
    if dphi.size == 0:
        return BitStream(np.array([], dtype=np.uint8))
    return BitStream(_decode_increments(dphi, config.bits_per_symbol))


def format_bit_log(tx_bits: np.ndarray, rx_bits: np.ndarray, width: int = 64) -> str:
    """Transmitted and received bits as aligned rows with mismatch markers.

    Positions beyond the shorter stream are marked as mismatches against a
    blank; the comparison is positional.
    """
    tx = np.asarray(tx_bits, dtype=np.uint8).reshape(-1)
    rx = np.asarray(rx_bits, dtype=np.uint8).reshape(-1)
    span = max(tx.size, rx.size)
    lines = ["# format_version: 1"]
    for start in range(0, span, width):
        stop = min(start + width, span)
        tx_row = "".join(str(tx[i]) if i < tx.size else " " for i in range(start, stop))
        rx_row = "".join(str(rx[i]) if i < rx.size else " " for i in range(start, stop))
        marks = "".join(
            " " if i < tx.size and i < rx.size and tx[i] == rx[i] else "^"
            for i in range(start, stop))
        lines.append(f"tx {start:6d} {tx_row}")
        lines.append(f"rx {start:6d} {rx_row}")
        lines.append(f"          {marks}")
    return "\n".join(lines) + "\n"
