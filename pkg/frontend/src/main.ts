/** Browser entry point: wires the controls, the stream and the four plots.
 *  All state lives in ConsoleStore; this file only reads it and forwards
 *  operator actions to the service. */

import { ServiceClient, StreamConnection } from "./client.js";
import { ConsoleStore } from "./store.js";
import { drawPlot, type Ctx2D, type Series } from "./plot.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const httpBase = window.location.origin;
const wsBase = httpBase.replace(/^http/, "ws");

const store = new ConsoleStore();
const client = new ServiceClient(httpBase);

const banner = el<HTMLDivElement>("banner");
const toastBox = el<HTMLDivElement>("toasts");
const calibrateBtn = el<HTMLButtonElement>("calibrate");
const fecBox = el<HTMLInputElement>("fec");
const bpsSlider = el<HTMLInputElement>("bps");
const bpsValue = el<HTMLSpanElement>("bps-value");
const detectorSel = el<HTMLSelectElement>("detector");
const msg1 = el<HTMLTextAreaElement>("msg1");
const msg2 = el<HTMLTextAreaElement>("msg2");
const generateBtn = el<HTMLButtonElement>("generate");
const startBtn = el<HTMLButtonElement>("start");
const stopBtn = el<HTMLButtonElement>("stop");
const hint = el<HTMLSpanElement>("hint");
const calInfo = el<HTMLSpanElement>("cal-info");
const decodedBox = [el<HTMLPreElement>("decoded1"), el<HTMLPreElement>("decoded2")];
const errorBox = [el<HTMLSpanElement>("errors1"), el<HTMLSpanElement>("errors2")];
const simTime = el<HTMLSpanElement>("sim-time");

interface PlotSlot {
  ctx: Ctx2D;
  width: number;
  height: number;
  title: string;
  series: () => Series[];
  yMin?: number;
  yMax?: number;
  xLabel?: string;
}

function canvasCtx(id: string): { ctx: Ctx2D; width: number; height: number } {
  const canvas = el<HTMLCanvasElement>(id);
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error(`no 2d context for #${id}`);
  return { ctx: ctx as unknown as Ctx2D, width: canvas.width, height: canvas.height };
}

function weightSeries(element: number): Series[] {
  const ring = store.weights[element - 1];
  const pts = ring ? ring.toArray() : [];
  return [
    { label: "I", color: "#6cf", points: pts.map((p) => ({ x: p.symbol, y: p.re })) },
    { label: "Q", color: "#fa6", points: pts.map((p) => ({ x: p.symbol, y: p.im })) },
  ];
}

function phaseSeries(rx: number): Series[] {
  const ring = store.phases[rx - 1];
  const pts = ring ? ring.toArray() : [];
  return [
    {
      label: `rx ${rx}`,
      color: rx === 1 ? "#8f8" : "#f88",
      points: pts.map((p) => ({ x: p.t_s, y: p.phase_deg })),
    },
  ];
}

const plots: PlotSlot[] = [
  { ...canvasCtx("plot-w1"), title: "weights: element 1", series: () => weightSeries(1), xLabel: "symbol" },
  { ...canvasCtx("plot-w2"), title: "weights: element 2", series: () => weightSeries(2), xLabel: "symbol" },
  { ...canvasCtx("plot-p1"), title: "rx 1 phase (deg)", series: () => phaseSeries(1), yMin: -180, yMax: 180, xLabel: "t (s)" },
  { ...canvasCtx("plot-p2"), title: "rx 2 phase (deg)", series: () => phaseSeries(2), yMin: -180, yMax: 180, xLabel: "t (s)" },
];

async function resync(): Promise<void> {
  store.applySession(await client.getSession());
}

const stream = new StreamConnection(`${wsBase}/stream`, {
  factory: (url) => new WebSocket(url),
  onEvent: (ev) => store.applyEvent(ev),
  onState: (state) => store.setConnection(state),
  resync,
  onParseError: (err) => store.toast(err.message),
});

function showToast(message: string): void {
  const node = document.createElement("div");
  node.className = "toast";
  node.textContent = message;
  toastBox.appendChild(node);
  setTimeout(() => node.remove(), 4000);
}

async function action(run: () => Promise<{ ok: boolean; status: number; body: unknown }>): Promise<void> {
  try {
    const result = await run();
    if (!result.ok) {
      const detail = (result.body as { detail?: string } | null)?.detail;
      showToast(detail ?? `request failed (${result.status})`);
    }
  } catch (err) {
    showToast(String(err));
  }
}

calibrateBtn.onclick = () => void action(() => client.calibrate());
stopBtn.onclick = () => void action(() => client.stop());
startBtn.onclick = () =>
  void action(() =>
    client.transmit({
      messages: [msg1.value, msg2.value],
      bits_per_symbol: Number(bpsSlider.value),
      fec: fecBox.checked,
      detector: detectorSel.value === "async" ? "async" : "sync",
    }),
  );
generateBtn.onclick = () =>
  void action(async () => {
    const result = await client.generate();
    if (result.ok) {
      const messages = result.body.messages;
      msg1.value = messages[0] ?? "";
      msg2.value = messages[1] ?? "";
    }
    return result;
  });
bpsSlider.oninput = () => {
  bpsValue.textContent = bpsSlider.value;
};

let renderedVersion = -1;

function render(): void {
  requestAnimationFrame(render);
  if (store.version === renderedVersion) return;
  renderedVersion = store.version;

  banner.hidden = store.connection === "connected";
  banner.textContent =
    store.connection === "connecting"
      ? "connecting to service..."
      : "connection lost, retrying...";

  startBtn.disabled = !store.canTransmit;
  calibrateBtn.disabled = store.connection !== "connected" || store.busy !== null;
  stopBtn.disabled = !store.transmitting;
  hint.textContent = store.calibrated
    ? store.busy
      ? `busy: ${store.busy}`
      : "ready"
    : "calibration required";

  const cal = store.session?.calibration;
  calInfo.textContent = cal
    ? `theta ${cal.theta_deg.map((t) => t.toFixed(2)).join(" / ")} deg, age ${cal.age_s.toFixed(3)} s`
    : "none";
  simTime.textContent = (store.session?.sim_time_s ?? 0).toFixed(3);

  store.decoded.forEach((text, i) => {
    const box = decodedBox[i];
    if (box) box.textContent = text;
  });
  store.counters.forEach((count, i) => {
    const box = errorBox[i];
    if (box) box.textContent = String(count);
  });

  for (const slot of plots) {
    drawPlot(slot.ctx, slot.width, slot.height, slot.title, slot.series(), {
      yMin: slot.yMin,
      yMax: slot.yMax,
      xLabel: slot.xLabel,
    });
  }

  for (const message of store.takeToasts()) showToast(message);
}

stream.start();
void resync().catch(() => {
  // the stream's reconnect loop will keep retrying; the banner stays up
});
requestAnimationFrame(render);
