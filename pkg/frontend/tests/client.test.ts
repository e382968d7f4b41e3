import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { WebSocketLike } from "../src/client.js";
import { ServiceClient, StreamConnection } from "../src/client.js";
import type { StreamEvent } from "../src/protocol.js";

class FakeSocket implements WebSocketLike {
  onopen: ((ev: any) => void) | null = null;
  onmessage: ((ev: any) => void) | null = null;
  onclose: ((ev: any) => void) | null = null;
  onerror: ((ev: any) => void) | null = null;
  closed = false;

  close(): void {
    this.closed = true;
    this.onclose?.({});
  }

  serverSend(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }

  serverDrop(): void {
    this.onclose?.({});
  }
}

describe("ServiceClient", () => {
  it("issues exactly one request per action", async () => {
    const seen: { url: string; init?: RequestInit }[] = [];
    const fetchImpl = async (url: string, init?: RequestInit) => {
      seen.push({ url, init });
      return new Response(JSON.stringify({ ok: true }), { status: 200 });
    };
    const client = new ServiceClient("http://svc", fetchImpl);
    await client.calibrate();
    await client.stop();
    await client.generate();
    await client.transmit({
      messages: ["a", "b"],
      bits_per_symbol: 2,
      fec: true,
      detector: "sync",
    });
    expect(seen.map((s) => s.url)).toEqual([
      "http://svc/calibrate",
      "http://svc/stop",
      "http://svc/generate",
      "http://svc/transmit",
    ]);
    expect(seen.every((s) => s.init?.method === "POST")).toBe(true);
    const body = JSON.parse(String(seen[3]!.init?.body));
    expect(body).toEqual({
      messages: ["a", "b"],
      bits_per_symbol: 2,
      fec: true,
      detector: "sync",
    });
  });

  it("surfaces busy responses as a result, not an exception", async () => {
    const fetchImpl = async () =>
      new Response(JSON.stringify({ detail: "busy: transmitting" }), { status: 409 });
    const client = new ServiceClient("http://svc", fetchImpl);
    const result = await client.calibrate();
    expect(result.ok).toBe(false);
    expect(result.status).toBe(409);
    expect((result.body as { detail: string }).detail).toBe("busy: transmitting");
  });
});

describe("StreamConnection", () => {
  let sockets: FakeSocket[];
  let events: StreamEvent[];
  let states: string[];
  let resyncs: number;

  function makeStream(retryMs = 50): StreamConnection {
    sockets = [];
    events = [];
    states = [];
    resyncs = 0;
    return new StreamConnection("ws://svc/stream", {
      factory: () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      onEvent: (ev) => events.push(ev),
      onState: (s) => states.push(s),
      resync: async () => {
        resyncs += 1;
      },
      retryMs,
    });
  }

  beforeEach(() => {
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("resyncs before delivering events, buffering anything early", async () => {
    const stream = makeStream();
    let release: () => void = () => {};
    const gate = new Promise<void>((resolve) => (release = resolve));
    const slow = new StreamConnection("ws://svc/stream", {
      factory: () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      onEvent: (ev) => events.push(ev),
      onState: (s) => states.push(s),
      resync: async () => {
        resyncs += 1;
        await gate;
      },
    });
    sockets = [];
    events = [];
    states = [];
    resyncs = 0;
    slow.start();
    const ws = sockets[0]!;
    ws.onopen?.({});
    // an event racing the session fetch must wait
    ws.serverSend({ type: "bit_errors", rx: 1, count: 7 });
    expect(events).toEqual([]);
    release();
    await vi.waitFor(() => expect(events.length).toBe(1));
    expect(states).toEqual(["connecting", "connected"]);
    expect(resyncs).toBe(1);
    expect(events[0]).toEqual({ type: "bit_errors", rx: 1, count: 7 });
    slow.stop();
    void stream;
  });

  it("reconnects after a drop and resyncs again", async () => {
    const stream = makeStream(50);
    stream.start();
    sockets[0]!.onopen?.({});
    await vi.waitFor(() => expect(states).toContain("connected"));
    sockets[0]!.serverSend({ type: "decoded_char", rx: 1, char: "a" });
    expect(events.length).toBe(1);

    sockets[0]!.serverDrop();
    expect(states[states.length - 1]).toBe("disconnected");

    await vi.advanceTimersByTimeAsync(60);
    expect(sockets.length).toBe(2);
    sockets[1]!.onopen?.({});
    await vi.waitFor(() => expect(resyncs).toBe(2));
    sockets[1]!.serverSend({ type: "decoded_char", rx: 1, char: "b" });
    expect(events.length).toBe(2);
    expect(states.filter((s) => s === "connected").length).toBe(2);
    stream.stop();
  });

  it("stop() ends the retry loop", async () => {
    const stream = makeStream(50);
    stream.start();
    sockets[0]!.onopen?.({});
    await vi.waitFor(() => expect(states).toContain("connected"));
    sockets[0]!.serverDrop();
    stream.stop();
    await vi.advanceTimersByTimeAsync(500);
    expect(sockets.length).toBe(1);
  });

  it("reports malformed frames without killing the stream", async () => {
    const parseErrors: string[] = [];
    sockets = [];
    events = [];
    states = [];
    const stream = new StreamConnection("ws://svc/stream", {
      factory: () => {
        const s = new FakeSocket();
        sockets.push(s);
        return s;
      },
      onEvent: (ev) => events.push(ev),
      onState: (s) => states.push(s),
      resync: async () => {},
      onParseError: (err) => parseErrors.push(err.message),
    });
    stream.start();
    sockets[0]!.onopen?.({});
    await vi.waitFor(() => expect(states).toContain("connected"));
    sockets[0]!.onmessage?.({ data: "garbage" });
    sockets[0]!.serverSend({ type: "bit_errors", rx: 2, count: 1 });
    expect(parseErrors.length).toBe(1);
    expect(events.length).toBe(1);
    stream.stop();
  });
});
