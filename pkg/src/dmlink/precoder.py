"""Pseudoinverse precoding: element weights that steer independent symbol
phases to each receiver simultaneously.

Solving w = pinv(H) r per symbol gives the minimum-norm excitation whose
response at receiver n is r_n. One global scalar then normalizes the whole
stream so the largest element amplitude is 1 (a single power setting per
message, never per-symbol gain riding).
"""

from __future__ import annotations

import numpy as np

from .array_channel import ChannelMatrix, WeightStream, as_channel

PINV_RCOND = 1e-12
RESIDUAL_RTOL = 1e-6


class RankDeficient(np.linalg.LinAlgError):
    """Requested targets are inconsistent with a rank-deficient channel."""


def pinv_weights(h: ChannelMatrix | np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Minimum-norm weight vector with H w = targets.

    Uses the SVD pseudoinverse with singular values below 1e-12 of the
    largest treated as zero. Raises RankDeficient when the achieved response
    misses the targets by more than 1e-6 relative.
    """
    hm = as_channel(h).entries
    r = np.asarray(targets, dtype=complex).reshape(-1)
    if r.shape[0] != hm.shape[0]:
        raise ValueError(f"got {r.shape[0]} targets for {hm.shape[0]} receivers")
    w = np.linalg.pinv(hm, rcond=PINV_RCOND) @ r
    scale = np.linalg.norm(r)
    residual = np.linalg.norm(hm @ w - r)
    if residual > RESIDUAL_RTOL * max(scale, 1e-300):
        raise RankDeficient(
            f"targets unreachable: residual {residual:.3g} vs |r| {scale:.3g}")
    return w


def build_weight_stream(h: ChannelMatrix | np.ndarray,
                        phase_sequences: np.ndarray,
                        symbol_duration: float,
                        peak_amplitude: float = 1.0) -> WeightStream:
    """Weight vector per symbol for per-receiver phase sequences.

    phase_sequences is (n_receivers, n_symbols) radians; symbol k targets
    the unit-modulus vector [e^{j phi_n(k)}]_n. A single scalar then scales
    every symbol so max |w_m(k)| equals peak_amplitude; relative responses,
    and therefore received phases, are unchanged by that scalar.
    """
    phases = np.atleast_2d(np.asarray(phase_sequences, dtype=float))
    hm = as_channel(h)
    if phases.shape[0] != hm.n_receivers:
        raise ValueError(
            f"{phases.shape[0]} phase sequences for {hm.n_receivers} receivers")
    targets = np.exp(1j * phases)  # (n_rx, n_symbols)
    # the pseudoinverse does not depend on the symbol, so factor it out
    p = np.linalg.pinv(hm.entries, rcond=PINV_RCOND)
    raw = (p @ targets).T  # (n_symbols, n_elements)
    residual = np.linalg.norm(hm.entries @ raw.T - targets, axis=0)
    scale_r = np.linalg.norm(targets, axis=0)
    bad = residual > RESIDUAL_RTOL * np.maximum(scale_r, 1e-300)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise RankDeficient(
            f"symbol {k} targets unreachable: residual {residual[k]:.3g} "
            f"vs |r| {scale_r[k]:.3g}")
    peak = np.abs(raw).max()
    scale = peak_amplitude / peak if peak > 0 else 1.0
    return WeightStream(raw * scale, symbol_duration)
