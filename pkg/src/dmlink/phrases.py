"""Seeded phrase pool for the operator console's message generator."""

from __future__ import annotations

import numpy as np

PHRASE_POOL: tuple[str, ...] = (
    "The quick brown antenna jumps the null.",
    "Steer twice, measure once.",
    "All bearings look alike in the dark.",
    "A watched sidelobe never boils.",
    "Phase is a promise amplitude keeps.",
    "Two receivers, one aperture, zero secrets shared.",
    "Calibration waits for no clock.",
    "Every degree of drift is borrowed time.",
    "Insertions shift everything that follows.",
    "Parity never lies, but it can be misled.",
    "Broadside is just endfire seen sideways.",
    "Symbols arrive when the detector says so.",
    "Hold the carrier, vary the story.",
    "Noise has no favorite receiver.",
)


def generate_message(rng: np.random.Generator) -> str:
    """One phrase from the pool, chosen by the supplied generator."""
    return PHRASE_POOL[int(rng.integers(len(PHRASE_POOL)))]
