import { describe, expect, it } from "vitest";

import type { SessionDoc } from "../src/protocol.js";
import { ConsoleStore, RING_CAPACITY } from "../src/store.js";

function sessionDoc(overrides: Partial<SessionDoc> = {}): SessionDoc {
  return {
    format_version: 1,
    scenario: {},
    sample_rate: 16000,
    symbol_rate: 1000,
    sim_time_s: 0.064,
    busy: null,
    calibration: {
      theta_deg: [31.3, -173.9],
      magnitudes: [
        [0.82, 0.82],
        [0.82, 0.82],
      ],
      at_time_s: 0.064,
      age_s: 0,
    },
    modem: { bits_per_symbol: 1, fec: false, detector: "sync", symbol_rate: 1000 },
    counters: { bit_errors: [0, 0], transmissions: 0 },
    last_transmission: null,
    ...overrides,
  };
}

describe("ConsoleStore", () => {
  it("fresh store cannot transmit until calibrated and connected", () => {
    const store = new ConsoleStore();
    expect(store.canTransmit).toBe(false);
    store.setConnection("connected");
    expect(store.canTransmit).toBe(false); // still no calibration
    store.applySession(sessionDoc());
    expect(store.canTransmit).toBe(true);
    store.applyEvent({ type: "status", state: "transmitting" });
    expect(store.canTransmit).toBe(false);
  });

  it("bit error counters are absolute; replaying an event cannot double-count", () => {
    const store = new ConsoleStore();
    store.applyEvent({ type: "bit_errors", rx: 1, count: 5 });
    store.applyEvent({ type: "bit_errors", rx: 1, count: 5 });
    store.applyEvent({ type: "bit_errors", rx: 1, count: 5 });
    expect(store.counters[0]).toBe(5);
    store.applyEvent({ type: "bit_errors", rx: 2, count: 12 });
    expect(store.counters).toEqual([5, 12]);
    // resync after a reconnect lands on the same values
    store.applySession(
      sessionDoc({ counters: { bit_errors: [5, 12], transmissions: 1 } }),
    );
    expect(store.counters).toEqual([5, 12]);
  });

  it("decoded text accumulates per channel and the terminal status seals it", () => {
    const store = new ConsoleStore();
    store.applyEvent({ type: "status", state: "transmitting", transmission_id: 1 });
    for (const c of "Hi") store.applyEvent({ type: "decoded_char", rx: 1, char: c });
    store.applyEvent({ type: "decoded_char", rx: 2, char: "Y" });
    expect(store.decoded).toEqual(["Hi", "Y"]);
    // suppose the last chars were lost to a stream drop: the terminal
    // status carries the authoritative result
    store.applyEvent({
      type: "status",
      state: "idle",
      transmission_id: 1,
      decoded: ["Hi!", "Yo."],
      bit_errors: [0, 0],
    });
    expect(store.decoded).toEqual(["Hi!", "Yo."]);
    expect(store.counters).toEqual([0, 0]);
    expect(store.transmitting).toBe(false);
  });

  it("a new transmission restarts the weight plots and decoded text", () => {
    const store = new ConsoleStore();
    store.applyEvent({ type: "weight", symbol: 0, element: 1, re: 1, im: 0 });
    store.applyEvent({ type: "weight", symbol: 0, element: 2, re: 0, im: 1 });
    store.applyEvent({ type: "decoded_char", rx: 1, char: "x" });
    store.applyEvent({ type: "status", state: "transmitting", transmission_id: 2 });
    expect(store.weights[0]!.length).toBe(0);
    expect(store.weights[1]!.length).toBe(0);
    expect(store.decoded).toEqual(["", ""]);
  });

  it("phase history survives transmissions and stays bounded", () => {
    const store = new ConsoleStore();
    for (let i = 0; i < RING_CAPACITY + 250; i++) {
      store.applyEvent({ type: "phase", rx: 1, t_s: i / 16000, phase_deg: 0 });
    }
    store.applyEvent({ type: "status", state: "transmitting" });
    expect(store.phases[0]!.length).toBe(RING_CAPACITY);
    const pts = store.phases[0]!.toArray();
    expect(pts[0]!.t_s).toBeCloseTo(250 / 16000, 12);
  });

  it("error status raises a toast and frees the busy flag", () => {
    const store = new ConsoleStore();
    store.applyEvent({ type: "status", state: "transmitting" });
    store.applyEvent({ type: "status", state: "error", message: "rank-deficient channel" });
    expect(store.busy).toBeNull();
    expect(store.takeToasts()).toEqual(["transmission failed: rank-deficient channel"]);
    expect(store.takeToasts()).toEqual([]);
  });

  it("mid-transmission resync keeps live decoded text", () => {
    const store = new ConsoleStore();
    store.applyEvent({ type: "status", state: "transmitting" });
    store.applyEvent({ type: "decoded_char", rx: 1, char: "p" });
    store.applySession(
      sessionDoc({ busy: "transmitting", counters: { bit_errors: [3, 0], transmissions: 1 } }),
    );
    expect(store.decoded[0]).toBe("p");
    expect(store.counters).toEqual([3, 0]);
    expect(store.busy).toBe("transmitting");
  });

  it("idle resync adopts the last transmission verbatim", () => {
    const store = new ConsoleStore();
    store.applySession(
      sessionDoc({
        counters: { bit_errors: [2, 0], transmissions: 1 },
        last_transmission: {
          transmission_id: 1,
          stopped: false,
          start_time_s: 0.064,
          end_time_s: 0.105,
          messages: ["Hi!", "Yo."],
          decoded: ["Hj!", "Yo."],
          bit_errors: [2, 0],
          anomalies: [[], []],
          bits_per_symbol: 1,
          fec: false,
          detector: "sync",
          wire_bits_per_channel: 40,
        },
      }),
    );
    expect(store.decoded).toEqual(["Hj!", "Yo."]);
    expect(store.counters).toEqual([2, 0]);
  });

  it("version counter ticks on every mutation", () => {
    const store = new ConsoleStore();
    const v0 = store.version;
    store.applyEvent({ type: "phase", rx: 1, t_s: 0, phase_deg: 1 });
    store.setConnection("connected");
    store.applySession(sessionDoc());
    expect(store.version).toBe(v0 + 3);
  });
});
