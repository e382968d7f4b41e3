"""HTTP/WebSocket backend for the operator console.

One session per service instance. Mutating requests (calibrate, transmit,
stop) are serialized: anything arriving while a calibration or transmission
is in flight gets 409. Readers (GET /session, WS /stream) are always
allowed. The transmission itself runs on a worker thread and replays
precomputed weights, phases and decoded characters as timestamped events,
so a browser can draw the link "live" while the math stays in one place.

All angles on the wire are degrees; all timestamps are simulation-clock
seconds (never wall clock).
"""

from __future__ import annotations

import asyncio
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from .calibration import CalibrationError
from .fec import ldpc_build
from .link import SimulatedLink
from .modem import (DetectorConfig, DpskConfig, async_detect, sync_detect,
                    trace_from_stream, uniform_boundaries, wrap_phase)
from .phrases import generate_message
from .precoder import build_weight_stream
from .scenario import Scenario, scenario_to_dict
from .transmission import build_frame, recover_message

FORMAT_VERSION = 1
PHASE_EVENTS_PER_SYMBOL = 4
DEFAULT_FEC_SEED = 11


class TransmitRequest(BaseModel):
    messages: list[str] = Field(min_length=1)
    bits_per_symbol: int = 1
    fec: bool = False
    detector: str = "sync"


class _Broadcast:
    """Fan-out of worker-thread events to websocket subscriber queues."""

    def __init__(self) -> None:
        self.queues: set[asyncio.Queue] = set()
        self.loop: Optional[asyncio.AbstractEventLoop] = None

    def attach_loop(self) -> None:
        # only the websocket endpoint attaches: queue waiters live on its
        # loop, and fanout must run there for the wakeup to be seen
        self.loop = asyncio.get_running_loop()

    def register(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue(maxsize=100000)
        self.queues.add(q)
        return q

    def unregister(self, q: asyncio.Queue) -> None:
        self.queues.discard(q)

    def publish(self, event: dict) -> None:
        loop = self.loop
        if loop is None or loop.is_closed():
            return
        try:
            loop.call_soon_threadsafe(self._fanout, event)
        except RuntimeError:
            pass  # loop closed between the check and the call

    def _fanout(self, event: dict) -> None:
        for q in list(self.queues):
            try:
                q.put_nowait(event)
            except asyncio.QueueFull:
                pass


@dataclass
class SessionState:
    """Everything one operator session knows, all under one mutex."""

    link: SimulatedLink
    symbol_rate: float
    pace_s: float
    calibration_window: int
    mutex: threading.Lock = field(default_factory=threading.Lock)
    busy: Optional[str] = None
    h_hat: Optional[np.ndarray] = None
    cal_theta_deg: Optional[list[float]] = None
    cal_magnitudes: Optional[list[list[float]]] = None
    cal_time: Optional[float] = None
    counters: list[int] = field(default_factory=list)
    transmissions: int = 0
    last_transmission: Optional[dict] = None
    modem: dict = field(default_factory=dict)
    stop_event: threading.Event = field(default_factory=threading.Event)
    worker: Optional[threading.Thread] = None
    broadcast: _Broadcast = field(default_factory=_Broadcast)
    generate_rng: Optional[np.random.Generator] = None

    def try_begin(self, what: str) -> bool:
        with self.mutex:
            if self.busy is not None:
                return False
            self.busy = what
            return True

    def end_busy(self) -> None:
        with self.mutex:
            self.busy = None


def _session_doc(st: SessionState) -> dict:
    with st.mutex:
        cal = None
        if st.h_hat is not None:
            cal = {
                "theta_deg": st.cal_theta_deg,
                "magnitudes": st.cal_magnitudes,
                "at_time_s": st.cal_time,
                "age_s": st.link.sim_time - st.cal_time,
            }
        return {
            "format_version": FORMAT_VERSION,
            "scenario": scenario_to_dict(st.link.scenario),
            "sample_rate": st.link.sample_rate,
            "symbol_rate": st.symbol_rate,
            "sim_time_s": st.link.sim_time,
            "busy": st.busy,
            "calibration": cal,
            "modem": dict(st.modem),
            "counters": {
                "bit_errors": list(st.counters),
                "transmissions": st.transmissions,
            },
            "last_transmission": st.last_transmission,
        }


def _char_ready_slot(char_index: int, bits_per_symbol: int) -> int:
    """Weight-stream slot after which message character char_index is fully
    on the air (slot 0 is the reference symbol)."""
    last_bit = 8 * (char_index + 1) - 1
    return 1 + last_bit // bits_per_symbol


def _run_transmission(st: SessionState, req: TransmitRequest, tx_id: int) -> None:
    """Worker-thread body: compute the whole transmission, then replay it."""
    pub = st.broadcast.publish
    link = st.link
    try:
        config = DpskConfig(req.bits_per_symbol, st.symbol_rate)
        fec = ldpc_build(DEFAULT_FEC_SEED) if req.fec else None
        frame = build_frame(req.messages, config, fec, terminator=True)
        weights = build_weight_stream(st.h_hat, frame.phases, config.symbol_duration)
        start_time = link.sim_time
        stream = link.transmit(weights)
        traces = trace_from_stream(stream)
        n_ch = len(traces)

        recovered = []
        for ch in range(n_ch):
            if req.detector == "sync":
                edges = uniform_boundaries(traces[ch].phases.size, frame.n_symbols + 1)
                detected = sync_detect(traces[ch], config, edges)
            else:
                detected = async_detect(traces[ch], config, DetectorConfig())
            recovered.append(recover_message(detected, frame))

        # per-character cumulative positional error counts over message bits
        n_msg_bits = frame.message_bits.shape[1]
        n_chars = n_msg_bits // 8
        prefix_errors = np.zeros((n_ch, n_chars), dtype=np.int64)
        for ch in range(n_ch):
            tx = frame.message_bits[ch]
            rx = recovered[ch].message_bits
            mism = np.ones(n_msg_bits, dtype=np.int64)
            overlap = min(n_msg_bits, rx.size)
            mism[:overlap] = tx[:overlap] != rx[:overlap]
            cum = np.cumsum(mism)
            prefix_errors[ch] = cum[8 * np.arange(1, n_chars + 1) - 1]

        pub({"type": "status", "state": "transmitting", "transmission_id": tx_id,
             "t_s": start_time, "bits_per_symbol": req.bits_per_symbol,
             "fec": req.fec, "detector": req.detector,
             "n_symbols": frame.n_symbols})

        n_slots = frame.n_symbols + 1
        samples_per_slot = stream.times.size / n_slots
        stride = max(1, int(samples_per_slot) // PHASE_EVENTS_PER_SYMBOL)
        base = list(st.counters)
        emitted_chars = [0] * n_ch
        wrapped_deg = [np.degrees(wrap_phase(tr.phases)) for tr in traces]
        stopped = False

        def emit_chars_through(slot: int, final: bool) -> None:
            for ch in range(n_ch):
                text = recovered[ch].text
                while emitted_chars[ch] < len(text):
                    c = emitted_chars[ch]
                    if not final and (fec is not None
                                      or _char_ready_slot(c, req.bits_per_symbol) > slot):
                        break
                    pub({"type": "decoded_char", "rx": ch + 1, "char": text[c]})
                    if c < n_chars:
                        count = base[ch] + int(prefix_errors[ch, c])
                        with st.mutex:
                            st.counters[ch] = count
                        pub({"type": "bit_errors", "rx": ch + 1, "count": count})
                    emitted_chars[ch] += 1

        for s in range(n_slots):
            if st.stop_event.is_set():
                stopped = True
                break
            for m in range(weights.n_elements):
                w = weights.vectors[s, m]
                pub({"type": "weight", "symbol": s, "element": m + 1,
                     "re": float(w.real), "im": float(w.imag)})
            lo = int(round(s * samples_per_slot))
            hi = int(round((s + 1) * samples_per_slot))
            for ch in range(n_ch):
                for i in range(lo, min(hi, stream.times.size), stride):
                    pub({"type": "phase", "rx": ch + 1,
                         "t_s": float(stream.times[i]),
                         "phase_deg": float(wrapped_deg[ch][i])})
            emit_chars_through(s, final=False)
            if st.pace_s > 0:
                st.stop_event.wait(st.pace_s)

        if not stopped:
            emit_chars_through(n_slots, final=True)
        totals = []
        for ch in range(n_ch):
            total = base[ch] + int(prefix_errors[ch, -1]) if n_chars else base[ch]
            if stopped:
                with st.mutex:
                    total = st.counters[ch]
            else:
                with st.mutex:
                    st.counters[ch] = total
                pub({"type": "bit_errors", "rx": ch + 1, "count": total})
            totals.append(total)

        summary = {
            "transmission_id": tx_id,
            "stopped": stopped,
            "start_time_s": start_time,
            "end_time_s": link.sim_time,
            "messages": list(req.messages),
            "decoded": [r.text for r in recovered],
            "bit_errors": [int(prefix_errors[ch, -1]) if n_chars else 0
                           for ch in range(n_ch)],
            "anomalies": [list(r.anomalies) for r in recovered],
            "bits_per_symbol": req.bits_per_symbol,
            "fec": req.fec,
            "detector": req.detector,
            "wire_bits_per_channel": int(frame.wire_bits.shape[1]),
        }
        with st.mutex:
            st.last_transmission = summary
            st.transmissions += 1
        pub({"type": "status", "state": "stopped" if stopped else "idle",
             "transmission_id": tx_id, "t_s": link.sim_time,
             "decoded": summary["decoded"], "bit_errors": totals})
    except Exception as exc:  # worker thread: surface instead of dying silent
        pub({"type": "status", "state": "error", "transmission_id": tx_id,
             "message": str(exc)})
    finally:
        st.end_busy()


def create_app(scenario: Scenario, sample_rate: float = 16000.0,
               symbol_rate: float = 1000.0, pace_s: float = 0.0,
               calibration_window: int = 256) -> FastAPI:
    """Build the service around one simulated link."""
    link = SimulatedLink(scenario, sample_rate=sample_rate)
    st = SessionState(link=link, symbol_rate=symbol_rate, pace_s=pace_s,
                      calibration_window=calibration_window,
                      counters=[0] * scenario.n_receivers)
    st.generate_rng = np.random.Generator(np.random.PCG64(scenario.noise.seed))
    st.modem = {"bits_per_symbol": 1, "fec": False, "detector": "sync",
                "symbol_rate": symbol_rate}

    app = FastAPI(title="dmlink console backend")
    app.state.session = st

    @app.get("/session")
    async def get_session() -> dict:
        return _session_doc(st)

    @app.post("/calibrate")
    async def post_calibrate() -> dict:
        if not st.try_begin("calibrating"):
            raise HTTPException(status_code=409, detail=f"busy: {st.busy}")
        try:
            def run():
                return st.link.run_calibration(window_samples=st.calibration_window)
            h_hat, csi, _ = await asyncio.to_thread(run)
            with st.mutex:
                st.h_hat = h_hat.entries
                st.cal_theta_deg = [float(np.degrees(t))
                                    for t in np.atleast_2d(csi.theta)[:, 0]]
                st.cal_magnitudes = csi.magnitudes.tolist()
                st.cal_time = st.link.sim_time
            st.broadcast.publish({"type": "status", "state": "calibrated",
                                  "t_s": st.link.sim_time,
                                  "theta_deg": st.cal_theta_deg})
            return {"status": "calibrated", "theta_deg": st.cal_theta_deg,
                    "at_time_s": st.cal_time}
        except CalibrationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        finally:
            st.end_busy()

    @app.post("/transmit")
    async def post_transmit(req: TransmitRequest) -> dict:
        if req.detector not in ("sync", "async"):
            raise HTTPException(status_code=422,
                                detail="detector must be 'sync' or 'async'")
        if not (1 <= req.bits_per_symbol <= 4):
            raise HTTPException(status_code=422,
                                detail="bits_per_symbol must be 1..4")
        if len(req.messages) != scenario.n_receivers:
            raise HTTPException(
                status_code=422,
                detail=f"messages: expected {scenario.n_receivers} entries, "
                       f"got {len(req.messages)}")
        for i, m in enumerate(req.messages):
            if any(ord(c) > 127 for c in m):
                raise HTTPException(status_code=422,
                                    detail=f"messages[{i}]: not 7-bit ASCII")
        if st.h_hat is None:
            raise HTTPException(status_code=409, detail="calibration required")
        if not st.try_begin("transmitting"):
            raise HTTPException(status_code=409, detail=f"busy: {st.busy}")
        st.stop_event.clear()
        tx_id = st.transmissions + 1
        with st.mutex:
            st.modem = {"bits_per_symbol": req.bits_per_symbol, "fec": req.fec,
                        "detector": req.detector, "symbol_rate": st.symbol_rate}
        st.worker = threading.Thread(target=_run_transmission,
                                     args=(st, req, tx_id), daemon=True)
        st.worker.start()
        return {"status": "started", "transmission_id": tx_id}

    @app.post("/stop")
    async def post_stop() -> dict:
        with st.mutex:
            transmitting = st.busy == "transmitting"
        if not transmitting:
            return {"status": "idle"}
        st.stop_event.set()
        return {"status": "stopping"}

    @app.post("/generate")
    async def post_generate() -> dict:
        with st.mutex:
            msgs = [generate_message(st.generate_rng)
                    for _ in range(scenario.n_receivers)]
        return {"messages": msgs}

    @app.websocket("/stream")
    async def ws_stream(ws: WebSocket) -> None:
        await ws.accept()
        st.broadcast.attach_loop()
        q = st.broadcast.register()
        try:
            await ws.send_json({"type": "status", "state": st.busy or "idle",
                                "t_s": st.link.sim_time})
            while True:
                event = await q.get()
                await ws.send_json(event)
        except WebSocketDisconnect:
            pass
        finally:
            st.broadcast.unregister(q)

    return app
