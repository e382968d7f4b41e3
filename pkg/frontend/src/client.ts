/** HTTP calls and the /stream subscription. Each operator action maps to
 *  exactly one request; state changes come back through events and
 *  GET /session, never from optimistic local mutation. */

import type { SessionDoc, StreamEvent, TransmitRequest } from "./protocol.js";
import { parseEvent } from "./protocol.js";

export interface ApiResult<T = unknown> {
  ok: boolean;
  status: number;
  body: T;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private fetchImpl: FetchLike;

  constructor(readonly baseUrl: string, fetchImpl?: FetchLike) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async post(path: string, payload?: unknown): Promise<ApiResult> {
    const init: RequestInit = { method: "POST" };
    if (payload !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(payload);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      body = null;
    }
    return { ok: resp.ok, status: resp.status, body };
  }

  async getSession(): Promise<SessionDoc> {
    const resp = await this.fetchImpl(this.baseUrl + "/session");
    if (!resp.ok) {
      throw new Error(`GET /session failed: ${resp.status}`);
    }
    return (await resp.json()) as SessionDoc;
  }

  calibrate(): Promise<ApiResult> {
    return this.post("/calibrate");
  }

  transmit(req: TransmitRequest): Promise<ApiResult> {
    return this.post("/transmit", req);
  }

  stop(): Promise<ApiResult> {
    return this.post("/stop");
  }

  generate(): Promise<ApiResult<{ messages: string[] }>> {
    return this.post("/generate") as Promise<ApiResult<{ messages: string[] }>>;
  }
}

/** The subset of the browser WebSocket API the stream needs; tests and the
 *  node integration runner inject their own implementation. Handler params
 *  are typed loosely so browser and `ws` sockets both fit unmodified. */
export interface WebSocketLike {
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface StreamOptions {
  factory: WebSocketFactory;
  onEvent: (ev: StreamEvent) => void;
  onState: (state: "connecting" | "connected" | "disconnected") => void;
  /** Called after every (re)connect before events flow; fetch /session here
   *  so absolute counters resume without double-counting. */
  resync: () => Promise<void>;
  retryMs?: number;
  onParseError?: (err: Error) => void;
}

const DEFAULT_RETRY_MS = 1000;

/** One /stream subscription with automatic reconnect. Events that arrive
 *  while the post-reconnect resync is still in flight are buffered and
 *  replayed after it, so the store never sees events against stale state. */
export class StreamConnection {
  private ws: WebSocketLike | null = null;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: StreamEvent[] | null = null;

  constructor(readonly url: string, private opts: StreamOptions) {}

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.ws) {
      const ws = this.ws;
      this.ws = null;
      ws.onclose = null;
      ws.close();
    }
  }

  private connect(): void {
    this.opts.onState("connecting");
    const ws = this.opts.factory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.pending = [];
      void this.opts
        .resync()
        .then(() => {
          const queued = this.pending ?? [];
          this.pending = null;
          this.opts.onState("connected");
          for (const ev of queued) this.opts.onEvent(ev);
        })
        .catch(() => {
          // session fetch failed: treat as a dead connection and retry
          this.pending = null;
          ws.close();
        });
    };
    ws.onmessage = (msg) => {
      let ev: StreamEvent;
      try {
        ev = parseEvent(String(msg.data));
      } catch (err) {
        this.opts.onParseError?.(err as Error);
        return;
      }
      if (this.pending !== null) {
        this.pending.push(ev);
      } else {
        this.opts.onEvent(ev);
      }
    };
    ws.onerror = () => {
      // the close handler owns reconnection
    };
    ws.onclose = () => {
      if (this.ws !== ws) return;
      this.ws = null;
      this.pending = null;
      this.opts.onState("disconnected");
      if (!this.stopped) {
        this.timer = setTimeout(() => {
          this.timer = null;
          if (!this.stopped) this.connect();
        }, this.opts.retryMs ?? DEFAULT_RETRY_MS);
      }
    };
  }
}
