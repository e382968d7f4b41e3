/** Wire schema of the dmlink service: GET /session document and the
 *  line-delimited JSON events on WS /stream. Angles are degrees, timestamps
 *  are simulation-clock seconds. */

export interface PhaseEvent {
  type: "phase";
  rx: number;
  t_s: number;
  phase_deg: number;
}

export interface WeightEvent {
  type: "weight";
  symbol: number;
  element: number;
  re: number;
  im: number;
}

export interface DecodedCharEvent {
  type: "decoded_char";
  rx: number;
  char: string;
}

export interface BitErrorsEvent {
  type: "bit_errors";
  rx: number;
  count: number;
}

export interface StatusEvent {
  type: "status";
  state: string;
  t_s?: number;
  transmission_id?: number;
  decoded?: string[];
  bit_errors?: number[];
  message?: string;
  theta_deg?: number[];
  n_symbols?: number;
  bits_per_symbol?: number;
  detector?: string;
  fec?: boolean;
}

export type StreamEvent =
  | PhaseEvent
  | WeightEvent
  | DecodedCharEvent
  | BitErrorsEvent
  | StatusEvent;

export interface CalibrationView {
  theta_deg: number[];
  magnitudes: number[][];
  at_time_s: number;
  age_s: number;
}

export interface LastTransmission {
  transmission_id: number;
  stopped: boolean;
  start_time_s: number;
  end_time_s: number;
  messages: string[];
  decoded: string[];
  bit_errors: number[];
  anomalies: string[][];
  bits_per_symbol: number;
  fec: boolean;
  detector: string;
  wire_bits_per_channel: number;
}

export interface SessionDoc {
  format_version: number;
  scenario: Record<string, unknown>;
  sample_rate: number;
  symbol_rate: number;
  sim_time_s: number;
  busy: string | null;
  calibration: CalibrationView | null;
  modem: {
    bits_per_symbol: number;
    fec: boolean;
    detector: string;
    symbol_rate: number;
  };
  counters: { bit_errors: number[]; transmissions: number };
  last_transmission: LastTransmission | null;
}

export interface TransmitRequest {
  messages: string[];
  bits_per_symbol: number;
  fec: boolean;
  detector: "sync" | "async";
}

const EVENT_FIELDS: Record<string, string[]> = {
  phase: ["rx", "t_s", "phase_deg"],
  weight: ["symbol", "element", "re", "im"],
  decoded_char: ["rx", "char"],
  bit_errors: ["rx", "count"],
  status: ["state"],
};

/** Parse one WS message. Throws on anything that is not a known event:
 *  a silent skip could leave the console quietly stale. */
export function parseEvent(raw: string): StreamEvent {
  let value: unknown;
  try {
    value = JSON.parse(raw);
  } catch {
    throw new Error(`stream: not JSON: ${raw.slice(0, 80)}`);
  }
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new Error("stream: event must be a JSON object");
  }
  const ev = value as Record<string, unknown>;
  const type = ev["type"];
  if (typeof type !== "string" || !(type in EVENT_FIELDS)) {
    throw new Error(`stream: unknown event type ${JSON.stringify(type)}`);
  }
  for (const field of EVENT_FIELDS[type] ?? []) {
    if (!(field in ev)) {
      throw new Error(`stream: ${type} event missing '${field}'`);
    }
  }
  return ev as unknown as StreamEvent;
}
