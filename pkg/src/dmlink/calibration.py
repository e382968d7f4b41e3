"""Amplitude-only array calibration.

Estimates the channel matrix using nothing but received amplitude readings.
For two elements the procedure costs exactly four transmissions: element 1
alone, element 2 alone, both at zero relative offset, both at +90 degrees.
The possible sign ambiguity of the inter-element phase is resolved by
comparing the quadrature amplitude against the two candidate predictions.

The estimate equals the true matrix up to one unit-modulus factor per row
(each row is rotated so its first entry is real non-negative). Differential
signalling never sees that factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .array_channel import ChannelMatrix

DEFAULT_FLOOR = 1e-6


class CalibrationError(RuntimeError):
    pass


class MeasurementFloor(CalibrationError):
    """A single-element amplitude sat at or below the measurement floor."""


class DegenerateMagnitude(CalibrationError):
    """Per-element magnitudes too small to form the phase equation."""


@dataclass(frozen=True)
class CalibrationMeasurements:
    """Received amplitude vectors from the probe transmissions.

    Each array holds one amplitude per receiver. solo has one entry per
    element; pair_zero[m-1] and pair_quad[m-1] are the zero-offset and
    quadrature probes of element m against element 1. With two elements this
    is exactly the four-transmission set.
    """

    solo: tuple[np.ndarray, ...]
    pair_zero: tuple[np.ndarray, ...]
    pair_quad: tuple[np.ndarray, ...]

    @property
    def amp_tx1_only(self) -> np.ndarray:
        return self.solo[0]

    @property
    def amp_tx2_only(self) -> np.ndarray:
        return self.solo[1]

    @property
    def amp_both_zero(self) -> np.ndarray:
        return self.pair_zero[0]

    @property
    def amp_both_quad(self) -> np.ndarray:
        return self.pair_quad[0]


@dataclass(frozen=True)
class EstimatedCsi:
    """Per-receiver element magnitudes and inter-element phases."""

    magnitudes: np.ndarray  # (n_receivers, n_elements)
    theta: np.ndarray       # (n_receivers, n_elements - 1), radians in (-pi, pi]


def probe_weights(n_elements: int) -> list[np.ndarray]:
    """Probe excitation vectors, in transmission order.

    Two elements cost four transmissions: [1,0], [0,1], [1,1], [1,j].
    Each extra element m adds its solo probe plus zero/quadrature pair
    probes against element 1.
    """
    if n_elements < 2:
        raise ValueError("calibration needs at least 2 elements")
    weights = []
    for m in range(n_elements):
        w = np.zeros(n_elements, dtype=complex)
        w[m] = 1.0
        weights.append(w)
    for m in range(1, n_elements):
        for offset in (1.0, 1j):
            w = np.zeros(n_elements, dtype=complex)
            w[0] = 1.0
            w[m] = offset
            weights.append(w)
    return weights


def run_calibration(transmit_and_measure: Callable[[np.ndarray], np.ndarray],
                    n_elements: int = 2,
                    floor: float = DEFAULT_FLOOR) -> CalibrationMeasurements:
    """Issue the probe transmissions in order and collect amplitudes.

    transmit_and_measure maps a weight vector to one amplitude per receiver.
    Raises MeasurementFloor if any receiver's solo amplitude for any element
    is at or below the floor (that element would be invisible there).
    """
    weights = probe_weights(n_elements)
    readings = [np.asarray(transmit_and_measure(w), dtype=float) for w in weights]
    solo = tuple(readings[:n_elements])
    for m, amps in enumerate(solo):
        if np.any(amps <= floor):
            bad = int(np.argmin(amps))
            raise MeasurementFloor(
                f"receiver {bad} hears element {m} at amplitude {amps[bad]:.3g} "
                f"(floor {floor:g})")
    pairs = readings[n_elements:]
    return CalibrationMeasurements(solo=solo,
                                   pair_zero=tuple(pairs[0::2]),
                                   pair_quad=tuple(pairs[1::2]))


def solve_abs_phase(t1: float, t2: float, both: float,
                    floor: float = DEFAULT_FLOOR) -> float:
    """Magnitude of the inter-element phase from three amplitudes.

    |t1 + t2 e^{j theta}|^2 = t1^2 + t2^2 + 2 t1 t2 cos(theta), solved for
    |theta|. The cosine argument is clamped to [-1, 1] so measurement noise
    at the extremes degrades to exactly 0 or pi instead of a domain error.
    """
    if t1 <= floor or t2 <= floor:
        raise DegenerateMagnitude(f"per-element amplitudes too small: {t1:g}, {t2:g}")
    arg = (both * both - t1 * t1 - t2 * t2) / (2.0 * t1 * t2)
    return float(np.arccos(np.clip(arg, -1.0, 1.0)))


def resolve_sign(t1: float, t2: float, abs_theta: float, quad_amplitude: float) -> int:
    """Sign of the inter-element phase from the quadrature probe.

    Predicts the quadrature amplitude under both sign hypotheses and picks
    the closer one; an exact tie resolves to +1.
    """
    p_plus = abs(t1 + t2 * np.exp(1j * (np.pi / 2 + abs_theta)))
    p_minus = abs(t1 + t2 * np.exp(1j * (np.pi / 2 - abs_theta)))
    return 1 if abs(quad_amplitude - p_plus) <= abs(quad_amplitude - p_minus) else -1


def assemble_H(csi: EstimatedCsi) -> ChannelMatrix:
    """Channel matrix with each row phase-referenced to element 1.

    Row n is [|T_n1|, |T_n2| e^{j theta_n}, ...]: first column real and
    non-negative by construction.
    """
    mags = np.asarray(csi.magnitudes, dtype=float)
    theta = np.atleast_2d(np.asarray(csi.theta, dtype=float))
    n_rx, n_el = mags.shape
    h = np.empty((n_rx, n_el), dtype=complex)
    h[:, 0] = mags[:, 0]
    for m in range(1, n_el):
        h[:, m] = mags[:, m] * np.exp(1j * theta[:, m - 1])
    return ChannelMatrix(h)


def estimate_csi(meas: CalibrationMeasurements, floor: float = DEFAULT_FLOOR) -> EstimatedCsi:
    solo = meas.solo
    n_el = len(solo)
    n_rx = solo[0].shape[0]
    mags = np.stack(solo, axis=1).astype(float)
    theta = np.empty((n_rx, n_el - 1), dtype=float)
    for m in range(1, n_el):
        zero = meas.pair_zero[m - 1]
        quad = meas.pair_quad[m - 1]
        for n in range(n_rx):
            t1 = float(solo[0][n])
            t2 = float(solo[m][n])
            abs_th = solve_abs_phase(t1, t2, float(zero[n]), floor)
            sign = resolve_sign(t1, t2, abs_th, float(quad[n]))
            theta[n, m - 1] = sign * abs_th
    return EstimatedCsi(magnitudes=mags, theta=theta)


def calibrate(transmit_and_measure: Callable[[np.ndarray], np.ndarray],
              n_elements: int = 2,
              floor: float = DEFAULT_FLOOR) -> tuple[ChannelMatrix, EstimatedCsi, CalibrationMeasurements]:
    """Full amplitude-only calibration: probe, solve, assemble."""
    meas = run_calibration(transmit_and_measure, n_elements, floor)
    csi = estimate_csi(meas, floor)
    return assemble_H(csi), csi, meas


def amplitude_estimate(samples: np.ndarray, discard_fraction: float = 0.1) -> np.ndarray:
    """Steady-state amplitude per receiver: mean |sample| after dropping the
    leading transient (first 10% of the window by default)."""
    s = np.atleast_2d(samples)
    start = int(np.floor(s.shape[1] * discard_fraction))
    return np.abs(s[:, start:]).mean(axis=1)
