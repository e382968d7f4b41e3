"""Scenario files: geometry, receivers and noise in one JSON document.

Schema (all keys required except noise fields, which default to zero):

    {
      "carrier_hz": 4.2e9,
      "element_positions_wavelengths": [0.0, 0.5],
      "receivers": [{"angle_deg": 80.0, "range_m": 1.22, "gain": 1.0}, ...],
      "noise": {"awgn_sigma": 0.0, "phase_noise_sigma_deg": 0.0,
                "timing_jitter": 0.0, "drift_deg_per_s": 0.0, "seed": 1}
    }

Angles and drift are degrees on disk, radians in memory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .array_channel import ArrayGeometry, NoiseConfig, ReceiverSpec


class ScenarioError(ValueError):
    """Malformed or unreadable scenario document."""


@dataclass(frozen=True)
class Scenario:
    geometry: ArrayGeometry
    receivers: tuple[ReceiverSpec, ...]
    noise: NoiseConfig

    @property
    def n_receivers(self) -> int:
        return len(self.receivers)


def _require(doc: dict, key: str):
    if key not in doc:
        raise ScenarioError(f"scenario is missing required key '{key}'")
    return doc[key]


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        carrier = float(_require(doc, "carrier_hz"))
        positions_wl = [float(p) for p in _require(doc, "element_positions_wavelengths")]
        rx_docs = _require(doc, "receivers")
        if not rx_docs:
            raise ScenarioError("scenario needs at least one receiver")
        wl = 299792458.0 / carrier
        geometry = ArrayGeometry(tuple(p * wl for p in positions_wl), carrier)
        receivers = tuple(
            ReceiverSpec(math.radians(float(r["angle_deg"])), float(r["range_m"]),
                         float(r.get("gain", 1.0)))
            for r in rx_docs
        )
        nd = doc.get("noise", {})
        noise = NoiseConfig(
            awgn_sigma=float(nd.get("awgn_sigma", 0.0)),
            phase_noise_sigma=math.radians(float(nd.get("phase_noise_sigma_deg", 0.0))),
            timing_jitter=float(nd.get("timing_jitter", 0.0)),
            drift_rate=math.radians(float(nd.get("drift_deg_per_s", 0.0))),
            seed=int(nd.get("seed", 0)),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario document: {exc}") from exc
    return Scenario(geometry, receivers, noise)


def scenario_to_dict(sc: Scenario) -> dict:
    wl = sc.geometry.wavelength
    return {
        "carrier_hz": sc.geometry.carrier_hz,
        "element_positions_wavelengths": [p / wl for p in sc.geometry.element_positions],
        "receivers": [
            {"angle_deg": math.degrees(r.angle_rad), "range_m": r.range_m, "gain": r.gain}
            for r in sc.receivers
        ],
        "noise": {
            "awgn_sigma": sc.noise.awgn_sigma,
            "phase_noise_sigma_deg": math.degrees(sc.noise.phase_noise_sigma),
            "timing_jitter": sc.noise.timing_jitter,
            "drift_deg_per_s": math.degrees(sc.noise.drift_rate),
            "seed": sc.noise.seed,
        },
    }


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario from a JSON file or from the built-in set by name."""
    p = Path(path)
    if not p.suffix and not p.exists():
        return builtin(str(path))
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {p}")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {p} is not valid JSON: {exc}")
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n")


def builtin_names() -> list[str]:
    root = resources.files("dmlink") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def builtin(name: str) -> Scenario:
    """Load one of the scenarios shipped with the package."""
    ref = resources.files("dmlink") / "scenarios" / f"{name}.json"
    try:
        doc = json.loads(ref.read_text())
    except FileNotFoundError:
        raise ScenarioError(
            f"unknown built-in scenario '{name}' (have: {', '.join(builtin_names())})")
    return scenario_from_dict(doc)
