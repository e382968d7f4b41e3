"""Directional-modulation link simulator.

A two-element transmit array steers independent DPSK phase streams at
spatially separated receivers. The package covers the whole chain:
channel synthesis, amplitude-only calibration, pseudoinverse precoding,
modulation, synchronous and asynchronous detection, LDPC coding, and
batch bit-error experiments, plus a CLI and a small HTTP/WebSocket
service for interactive use.
"""

from .array_channel import (MIN_SAMPLES_PER_SYMBOL, NOISELESS, SPEED_OF_LIGHT,
                            ArrayGeometry, ChannelMatrix, NoiseConfig,
                            ReceiverSpec, RxSampleStream, WeightStream,
                            as_channel, propagate, synth_channel, ula)
from .calibration import (CalibrationMeasurements, DegenerateMagnitude,
                          EstimatedCsi, MeasurementFloor, amplitude_estimate,
                          assemble_H, calibrate, estimate_csi, probe_weights,
                          resolve_sign, run_calibration, solve_abs_phase)
from .experiments import (BerStats, ErrorBreakdown, ExperimentConfig,
                          ExperimentResult, MessageRecord, ber_stats,
                          classify_errors, positional_bit_errors,
                          random_printable_text, run_experiment)
from .fec import (LdpcCode, ConstructionFailed, LengthMismatch, export_alist,
                  ldpc_build, ldpc_decode, ldpc_encode, parity_matrix,
                  syndrome)
from .link import SimulatedLink, derive_seed
from .modem import (BitStream, DecodedText, DetectorConfig, DpskConfig,
                    NonAscii, PhaseTrace, async_detect, constellation,
                    decode_ascii, dpsk_modulate, encode_ascii, format_bit_log,
                    pad_messages, sync_detect, trace_from_stream,
                    uniform_boundaries, wrap_phase)
from .phrases import PHRASE_POOL, generate_message
from .precoder import RankDeficient, build_weight_stream, pinv_weights
from .scenario import (Scenario, ScenarioError, builtin, builtin_names,
                       load_scenario, save_scenario, scenario_from_dict,
                       scenario_to_dict)
from .transmission import TERMINATOR, RecoveredMessage, TxFrame, build_frame, recover_message

__version__ = "1.0.0"

__all__ = [
    "ArrayGeometry", "ReceiverSpec", "NoiseConfig", "NOISELESS",
    "ChannelMatrix", "WeightStream", "RxSampleStream", "ula", "as_channel",
    "synth_channel", "propagate", "SPEED_OF_LIGHT", "MIN_SAMPLES_PER_SYMBOL",
    "CalibrationMeasurements", "EstimatedCsi", "MeasurementFloor",
    "DegenerateMagnitude", "probe_weights", "run_calibration",
    "solve_abs_phase", "resolve_sign", "assemble_H", "estimate_csi",
    "calibrate", "amplitude_estimate",
    "RankDeficient", "pinv_weights", "build_weight_stream",
    "DpskConfig", "DetectorConfig", "BitStream", "PhaseTrace", "DecodedText",
    "NonAscii", "constellation", "encode_ascii", "decode_ascii",
    "pad_messages", "dpsk_modulate", "trace_from_stream",
    "uniform_boundaries", "sync_detect", "async_detect", "wrap_phase",
    "format_bit_log",
    "LdpcCode", "ConstructionFailed", "LengthMismatch", "ldpc_build",
    "ldpc_encode", "ldpc_decode", "syndrome", "parity_matrix", "export_alist",
    "TxFrame", "RecoveredMessage", "TERMINATOR", "build_frame",
    "recover_message",
    "ErrorBreakdown", "BerStats", "MessageRecord", "ExperimentConfig",
    "ExperimentResult", "positional_bit_errors", "classify_errors",
    "ber_stats", "random_printable_text", "run_experiment",
    "Scenario", "ScenarioError", "scenario_from_dict", "scenario_to_dict",
    "load_scenario", "save_scenario", "builtin", "builtin_names",
    "SimulatedLink", "derive_seed",
    "PHRASE_POOL", "generate_message",
]
