"""A stateful over-the-air stand-in: one scenario, one clock, one seed lane.

Every transmission advances the simulation clock (so drift accumulates
between calibration and later messages) and consumes one slot in a counter-
indexed seed sequence, so re-running the same call sequence reproduces the
same bits while successive transmissions see fresh noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array_channel import (ChannelMatrix, NoiseConfig, RxSampleStream,
                            WeightStream, propagate, synth_channel)
from .calibration import amplitude_estimate, calibrate
from .scenario import Scenario

DEFAULT_SAMPLE_RATE = 16000.0
DEFAULT_CAL_WINDOW = 256


def derive_seed(base_seed: int, counter: int) -> int:
    """Stable child seed for operation number `counter`."""
    ss = np.random.SeedSequence([np.uint64(base_seed & (2**64 - 1)), np.uint64(counter)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class SimulatedLink:
    scenario: Scenario
    sample_rate: float = DEFAULT_SAMPLE_RATE
    sim_time: float = 0.0
    op_counter: int = 0
    h_true: ChannelMatrix = field(init=False)

    def __post_init__(self) -> None:
        self.h_true = synth_channel(self.scenario.geometry, self.scenario.receivers)

    @property
    def n_elements(self) -> int:
        return self.scenario.geometry.n_elements

    def _noise_for_next_op(self) -> NoiseConfig:
        noise = self.scenario.noise
        seed = derive_seed(noise.seed, self.op_counter)
        self.op_counter += 1
        return noise.with_seed(seed)

    def transmit(self, weights: WeightStream) -> RxSampleStream:
        """Play a weight stream from the current clock; advances the clock."""
        noise = self._noise_for_next_op()
        stream = propagate(self.h_true, weights, noise, self.sample_rate,
                           start_time=self.sim_time)
        self.sim_time += weights.n_symbols * weights.symbol_duration
        return stream

    def measure_amplitudes(self, w: np.ndarray,
                           window_samples: int = DEFAULT_CAL_WINDOW) -> np.ndarray:
        """Hold one weight vector for a measurement window and read the
        steady-state amplitude at each receiver."""
        duration = window_samples / self.sample_rate
        stream = self.transmit(WeightStream(np.asarray(w, dtype=complex)[None, :], duration))
        return amplitude_estimate(stream.samples)

    def run_calibration(self, window_samples: int = DEFAULT_CAL_WINDOW):
        """Amplitude-only calibration over this link; returns what
        calibration.calibrate returns."""
        return calibrate(lambda w: self.measure_amplitudes(w, window_samples),
                         n_elements=self.n_elements)

    def state_dict(self) -> dict:
        return {"sim_time": self.sim_time, "op_counter": self.op_counter}

    def restore_state(self, state: dict) -> None:
        self.sim_time = float(state["sim_time"])
        self.op_counter = int(state["op_counter"])
