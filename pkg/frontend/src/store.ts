/** Client-side session state. Everything here mirrors the server: counters
 *  and decoded text are taken from server events and documents, never
 *  computed locally, so a dropped and re-established stream can resync with
 *  a plain GET /session and nothing double-counts. */

import { RingBuffer } from "./ring.js";
import type { SessionDoc, StatusEvent, StreamEvent } from "./protocol.js";

export const RING_CAPACITY = 5000;

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface WeightPoint {
  symbol: number;
  re: number;
  im: number;
}

export interface PhasePoint {
  t_s: number;
  phase_deg: number;
}

const TERMINAL_STATES = new Set(["idle", "stopped", "error"]);

export class ConsoleStore {
  connection: ConnectionState = "connecting";
  session: SessionDoc | null = null;
  busy: string | null = null;
  calibrated = false;
  transmitting = false;
  decoded: string[] = ["", ""];
  counters: number[] = [0, 0];
  /** One buffer per transmit element; x is the symbol index. */
  weights: RingBuffer<WeightPoint>[] = [];
  /** One buffer per receiver; x is simulation time. */
  phases: RingBuffer<PhasePoint>[] = [];
  toasts: string[] = [];
  lastStatus: StatusEvent | null = null;
  /** Bumped on every mutation so a render loop can redraw only on change. */
  version = 0;

  constructor(channels = 2) {
    this.ensureChannels(channels);
  }

  get canTransmit(): boolean {
    return this.connection === "connected" && this.calibrated && this.busy === null;
  }

  ensureChannels(n: number): void {
    while (this.weights.length < n) {
      this.weights.push(new RingBuffer<WeightPoint>(RING_CAPACITY));
    }
    while (this.phases.length < n) {
      this.phases.push(new RingBuffer<PhasePoint>(RING_CAPACITY));
    }
    while (this.decoded.length < n) this.decoded.push("");
    while (this.counters.length < n) this.counters.push(0);
  }

  toast(message: string): void {
    this.toasts.push(message);
    this.version += 1;
  }

  takeToasts(): string[] {
    const out = this.toasts;
    this.toasts = [];
    return out;
  }

  setConnection(state: ConnectionState): void {
    this.connection = state;
    this.version += 1;
  }

  /** Authoritative resync from GET /session; used at startup and after a
   *  reconnect. Live decoded text is preserved mid-transmission (the
   *  document's last_transmission is the previous one until completion). */
  applySession(doc: SessionDoc): void {
    this.session = doc;
    this.busy = doc.busy;
    this.calibrated = doc.calibration !== null;
    this.transmitting = doc.busy === "transmitting";
    this.ensureChannels(doc.counters.bit_errors.length);
    this.counters = doc.counters.bit_errors.slice();
    if (!this.transmitting) {
      this.decoded = doc.last_transmission
        ? doc.last_transmission.decoded.slice()
        : this.decoded.map(() => "");
    }
    this.version += 1;
  }

  applyEvent(ev: StreamEvent): void {
    switch (ev.type) {
      case "phase": {
        this.ensureChannels(ev.rx);
        this.phases[ev.rx - 1]!.push({ t_s: ev.t_s, phase_deg: ev.phase_deg });
        break;
      }
      case "weight": {
        while (this.weights.length < ev.element) {
          this.weights.push(new RingBuffer<WeightPoint>(RING_CAPACITY));
        }
        this.weights[ev.element - 1]!.push({
          symbol: ev.symbol,
          re: ev.re,
          im: ev.im,
        });
        break;
      }
      case "decoded_char": {
        this.ensureChannels(ev.rx);
        this.decoded[ev.rx - 1] += ev.char;
        break;
      }
      case "bit_errors": {
        this.ensureChannels(ev.rx);
        this.counters[ev.rx - 1] = ev.count; // absolute, not a delta
        break;
      }
      case "status":
        this.applyStatus(ev);
        break;
    }
    this.version += 1;
  }

  private applyStatus(ev: StatusEvent): void {
    this.lastStatus = ev;
    if (ev.state === "transmitting") {
      this.transmitting = true;
      this.busy = "transmitting";
      // weight plots are per-symbol-index; a new transmission restarts at 0
      for (const ring of this.weights) ring.clear();
      this.decoded = this.decoded.map(() => "");
    } else if (TERMINAL_STATES.has(ev.state)) {
      this.transmitting = false;
      this.busy = null;
      // the terminal status carries the full server-side result; adopting it
      // keeps the display byte-identical even if stream events were missed
      if (ev.decoded) {
        this.ensureChannels(ev.decoded.length);
        ev.decoded.forEach((text, i) => (this.decoded[i] = text));
      }
      if (ev.bit_errors) {
        this.ensureChannels(ev.bit_errors.length);
        ev.bit_errors.forEach((count, i) => (this.counters[i] = count));
      }
      if (ev.state === "error") {
        this.toast(`transmission failed: ${ev.message ?? "unknown error"}`);
      }
    } else if (ev.state === "calibrating") {
      this.busy = "calibrating";
    } else if (ev.state === "calibrated") {
      this.calibrated = true;
      this.busy = null;
    }
  }
}
