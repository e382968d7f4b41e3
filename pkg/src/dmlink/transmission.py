"""Message-level pipeline shared by the batch harness, CLI and service.

Builds the transmit side (text -> bits -> optional FEC -> symbol phases)
and recovers message bits from whatever a detector produced, including
streams whose length no longer matches what was sent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fec import LdpcCode, ldpc_decode, ldpc_encode
from .modem import (BitStream, DpskConfig, decode_ascii, dpsk_modulate,
                    encode_ascii, pad_messages, symbol_pad_bits)

TERMINATOR = "\x00"


@dataclass(frozen=True)
class TxFrame:
    """Everything the transmitter produced for one batch of messages."""

    texts: tuple[str, ...]          # original operator texts
    padded: tuple[str, ...]         # after optional terminator + equal padding
    message_bits: np.ndarray        # (n_channels, bits) pre-FEC payload
    wire_bits: np.ndarray           # (n_channels, bits) as transmitted
    phases: np.ndarray              # (n_channels, n_symbols+1) accumulated
    config: DpskConfig
    fec: LdpcCode | None
    fec_blocks: int
    fec_pad: int                    # zero bits filling the last FEC block
    symbol_pad: int                 # zero bits filling the last symbol group

    @property
    def n_channels(self) -> int:
        return self.message_bits.shape[0]

    @property
    def bits_per_channel(self) -> int:
        return self.message_bits.shape[1]

    @property
    def n_symbols(self) -> int:
        """Data symbols per channel (transitions; the reference adds one
        more interval on air)."""
        return self.phases.shape[1] - 1

    @property
    def duration(self) -> float:
        return (self.n_symbols + 1) * self.config.symbol_duration


@dataclass(frozen=True)
class RecoveredMessage:
    """Receiver-side view of one channel."""

    message_bits: np.ndarray
    wire_bits: np.ndarray
    text: str
    anomalies: tuple[str, ...] = ()
    fec_converged: bool | None = None
    fec_iterations: int = 0


def build_frame(texts: list[str] | tuple[str, ...],
                config: DpskConfig,
                fec: LdpcCode | None = None,
                terminator: bool = True) -> TxFrame:
    """Transmit-side framing for one message per channel.

    With terminator=True each text gains a NUL sentinel before the texts are
    padded to equal length (the operator path); batch experiments use
    fixed-length texts with no sentinel so the bit budget is exact.
    """
    if not texts:
        raise ValueError("need at least one message")
    originals = tuple(texts)
    staged = [t + TERMINATOR for t in originals] if terminator else list(originals)
    padded = tuple(pad_messages(staged))
    message_bits = np.stack([encode_ascii(t).bits for t in padded])
    fec_blocks = 0
    fec_pad = 0
    if fec is not None:
        n_bits = message_bits.shape[1]
        fec_blocks = max(1, -(-n_bits // fec.k))
        fec_pad = fec_blocks * fec.k - n_bits
        wire_rows = []
        for row in message_bits:
            filled = np.concatenate([row, np.zeros(fec_pad, dtype=np.uint8)])
            blocks = [ldpc_encode(fec, filled[b * fec.k:(b + 1) * fec.k])
                      for b in range(fec_blocks)]
            wire_rows.append(np.concatenate(blocks))
        wire_bits = np.stack(wire_rows)
    else:
        wire_bits = message_bits
    symbol_pad = symbol_pad_bits(wire_bits.shape[1], config.bits_per_symbol)
    phases = np.stack([dpsk_modulate(row, config) for row in wire_bits])
    return TxFrame(texts=originals, padded=padded, message_bits=message_bits,
                   wire_bits=wire_bits, phases=phases, config=config, fec=fec,
                   fec_blocks=fec_blocks, fec_pad=fec_pad, symbol_pad=symbol_pad)


def _salvage_systematic(wire_rx: np.ndarray, fec: LdpcCode, blocks: int) -> np.ndarray:
    """Positional fallback when FEC framing is impossible: read the
    systematic half of each nominal block span, as far as the stream goes."""
    parts = []
    for b in range(blocks):
        start = b * fec.n
        parts.append(wire_rx[start:start + fec.k])
    return np.concatenate(parts) if parts else np.array([], dtype=np.uint8)


def recover_message(detected: BitStream | np.ndarray, frame: TxFrame) -> RecoveredMessage:
    """Turn detected bits for one channel back into message bits and text.

    Exact-length streams shed the symbol-group padding and, with FEC, run the
    decoder per block. Length-mismatched FEC streams are rejected by framing
    (an insertion makes block boundaries unknowable); the systematic bit
    positions are salvaged so positional error counting still applies.
    """
    raw = detected.bits if isinstance(detected, BitStream) else np.asarray(detected, dtype=np.uint8)
    anomalies: list[str] = []
    expected_detected = frame.wire_bits.shape[1] + frame.symbol_pad
    if raw.size == expected_detected:
        wire_rx = raw[:frame.wire_bits.shape[1]]
    else:
        anomalies.append(f"detected {raw.size} bits, expected {expected_detected}")
        wire_rx = raw
    fec_converged: bool | None = None
    fec_iterations = 0
    if frame.fec is not None:
        code = frame.fec
        if wire_rx.size == frame.fec_blocks * code.n:
            decoded = []
            fec_converged = True
            for b in range(frame.fec_blocks):
                msg, ok, iters = ldpc_decode(code, wire_rx[b * code.n:(b + 1) * code.n])
                decoded.append(msg)
                fec_converged = fec_converged and ok
                fec_iterations += iters
            message_rx = np.concatenate(decoded)
        else:
            anomalies.append("length mismatch: FEC framing rejected the stream")
            fec_converged = False
            message_rx = _salvage_systematic(wire_rx, code, frame.fec_blocks)
        if frame.fec_pad and message_rx.size >= frame.bits_per_channel:
            message_rx = message_rx[:frame.bits_per_channel]
    else:
        message_rx = wire_rx
    text = decode_ascii(message_rx).text
    return RecoveredMessage(message_bits=message_rx, wire_bits=wire_rx, text=text,
                            anomalies=tuple(anomalies), fec_converged=fec_converged,
                            fec_iterations=fec_iterations)
