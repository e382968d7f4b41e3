"""File exports: stats, bit logs, calibration reports, phase and weight CSVs.

Every document carries a format_version and only simulation-clock times, so
identical runs serialize to identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .experiments import BerStats, ExperimentResult
from .modem import PhaseTrace, format_bit_log, wrap_phase
from .array_channel import WeightStream
from .scenario import Scenario, scenario_to_dict

FORMAT_VERSION = 1


def _stats_dict(s: BerStats) -> dict:
    return {
        "total_bit_errors": s.total_bit_errors,
        "total_bits": s.total_bits,
        "num_messages": s.num_messages,
        "percent": s.percent,
        "percent_2dp": s.percent_2dp,
        "mean_per_message": s.mean,
        "mean_per_message_2dp": s.mean_2dp,
        "std_per_message": s.std,
        "std_per_message_2dp": s.std_2dp,
    }


def experiment_stats_doc(result: ExperimentResult) -> dict:
    cfg = result.config
    return {
        "format_version": FORMAT_VERSION,
        "config": {
            "num_messages": cfg.num_messages,
            "chars_per_message": cfg.chars_per_message,
            "bits_per_symbol": cfg.bits_per_symbol,
            "fec_enabled": cfg.fec_enabled,
            "detector": cfg.detector,
            "master_seed": cfg.master_seed,
            "symbol_rate": cfg.symbol_rate,
            "sample_rate": cfg.sample_rate,
            "scenario": scenario_to_dict(cfg.scenario),
        },
        "channels": [
            {
                "receiver": ch,
                "stats": _stats_dict(result.per_channel[ch]),
                "breakdown": {
                    "insertions": result.breakdown[ch].insertions,
                    "deletions": result.breakdown[ch].deletions,
                    "substitutions": result.breakdown[ch].substitutions,
                },
                "per_message_errors": [r.bit_errors for r in result.records[ch]],
                "anomalies": sum(len(r.anomalies) for r in result.records[ch]),
            }
            for ch in range(result.n_channels)
        ],
    }


def write_stats_json(result: ExperimentResult, path: str | Path) -> None:
    doc = experiment_stats_doc(result)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_stats_json(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != FORMAT_VERSION or "channels" not in doc:
        raise ValueError(f"{path} is not a stats document")
    return doc


def dump_json(doc: dict, path: str | Path) -> None:
    """The one JSON writer everything uses, so re-export is a fixed point."""
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_bit_logs(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """One log per channel and message, aligned tx/rx rows with markers."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for ch in range(result.n_channels):
        for rec in result.records[ch]:
            if rec.tx_wire_bits is None or rec.rx_wire_bits is None:
                continue
            p = out / f"bits_rx{ch + 1}_msg{rec.index:04d}.log"
            p.write_text(format_bit_log(rec.tx_wire_bits, rec.rx_wire_bits))
            written.append(p)
    return written


def write_phase_csv(traces: list[PhaseTrace], path: str | Path) -> None:
    """time_s,receiver_id,phase_deg rows; phase wrapped to (-180, 180]."""
    lines = [f"# format_version: {FORMAT_VERSION}", "time_s,receiver_id,phase_deg"]
    for trace in traces:
        wrapped = np.degrees(wrap_phase(trace.phases))
        for t, p in zip(trace.times, wrapped):
            lines.append(f"{t:.9f},{trace.receiver + 1},{p:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_phase_csv(path: str | Path) -> list[PhaseTrace]:
    """Inverse of write_phase_csv (wrapped phases, radians in memory)."""
    rows = [ln for ln in Path(path).read_text().splitlines()
            if ln and not ln.startswith("#")]
    if not rows or rows[0] != "time_s,receiver_id,phase_deg":
        raise ValueError(f"{path} is not a phase CSV")
    by_rx: dict[int, list[tuple[float, float]]] = {}
    for ln in rows[1:]:
        t, rx, p = ln.split(",")
        by_rx.setdefault(int(rx), []).append((float(t), math.radians(float(p))))
    return [
        PhaseTrace(times=np.array([t for t, _ in pts]),
                   phases=np.array([p for _, p in pts]), receiver=rx - 1)
        for rx, pts in sorted(by_rx.items())
    ]


def write_weights_csv(weights: WeightStream | np.ndarray, path: str | Path) -> None:
    """symbol_index,element_index,re,im rows, one per symbol and element."""
    vectors = weights.vectors if isinstance(weights, WeightStream) else np.asarray(weights)
    lines = [f"# format_version: {FORMAT_VERSION}", "symbol_index,element_index,re,im"]
    for k in range(vectors.shape[0]):
        for m in range(vectors.shape[1]):
            w = vectors[k, m]
            lines.append(f"{k},{m + 1},{w.real:.12g},{w.imag:.12g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_weights_csv(path: str | Path) -> np.ndarray:
    """Inverse of write_weights_csv; returns the (n_symbols, n_elements)
    complex weight array (symbol timing is not stored in the CSV)."""
    rows = [ln for ln in Path(path).read_text().splitlines()
            if ln and not ln.startswith("#")]
    if not rows or rows[0] != "symbol_index,element_index,re,im":
        raise ValueError(f"{path} is not a weights CSV")
    parsed = [ln.split(",") for ln in rows[1:]]
    n_sym = 1 + max(int(r[0]) for r in parsed)
    n_el = max(int(r[1]) for r in parsed)
    out = np.zeros((n_sym, n_el), dtype=complex)
    for k, m, re, im in parsed:
        out[int(k), int(m) - 1] = float(re) + 1j * float(im)
    return out


def parse_bit_log(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of modem.format_bit_log: recover the tx and rx bit streams."""
    tx_chunks: list[str] = []
    rx_chunks: list[str] = []
    for ln in text.splitlines():
        if ln.startswith("tx "):
            tx_chunks.append(ln[10:])
        elif ln.startswith("rx "):
            rx_chunks.append(ln[10:])
    tx = "".join(tx_chunks).replace(" ", "")
    rx = "".join(rx_chunks).replace(" ", "")
    return (np.array([int(c) for c in tx], dtype=np.uint8),
            np.array([int(c) for c in rx], dtype=np.uint8))


def calibration_report_doc(h_hat: np.ndarray, csi, meas, scenario: Scenario,
                           link_state: dict, sample_rate: float,
                           window_samples: int) -> dict:
    h = np.asarray(h_hat, dtype=complex)
    return {
        "format_version": FORMAT_VERSION,
        "magnitudes": np.abs(h).tolist(),
        "theta_deg": [math.degrees(t) for t in np.atleast_2d(csi.theta)[:, 0]],
        "measurements": {
            "solo": [a.tolist() for a in meas.solo],
            "pair_zero": [a.tolist() for a in meas.pair_zero],
            "pair_quad": [a.tolist() for a in meas.pair_quad],
        },
        "h_estimate": {
            "re": h.real.tolist(),
            "im": h.imag.tolist(),
        },
        "scenario": scenario_to_dict(scenario),
        "sample_rate": sample_rate,
        "calibration_window": window_samples,
        "link_state": link_state,
    }


def write_calibration_report(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_calibration_report(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if "h_estimate" not in doc:
        raise ValueError(f"{path} is not a calibration report")
    return doc


def h_from_report(doc: dict) -> np.ndarray:
    return np.asarray(doc["h_estimate"]["re"], dtype=float) + \
        1j * np.asarray(doc["h_estimate"]["im"], dtype=float)
