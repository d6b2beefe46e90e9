// DOM wiring for the IDE: editor, console, frame viewer, and sensor
// control panel around one Session.

import { framesizeDims, parseErrorLine, Session } from "./session.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
};

const DEFAULT_SCRIPT = `sensor.set_framesize(sensor.QVGA)
n = 0
while n < 100:
    img = sensor.snapshot()
    time.sleep_ms(20)
    n = n + 1
print('captured', n)
`;

const endpointInput = $<HTMLInputElement>("endpoint");
const connectButton = $<HTMLButtonElement>("connect");
const stateDot = $("state-dot");
const stateLabel = $("state-label");
const editor = $<HTMLTextAreaElement>("editor");
const highlight = $("editor-highlight");
const runButton = $<HTMLButtonElement>("run");
const stopButton = $<HTMLButtonElement>("stop");
const statusLabel = $("script-status");
const consoleLog = $("console-log");
const clearButton = $<HTMLButtonElement>("clear-console");
const viewerCanvas = $<HTMLCanvasElement>("viewer");
const dimsLabel = $("viewer-dims");
const fpsLabel = $("viewer-fps");
const pollSelect = $<HTMLSelectElement>("poll-interval");
const panelBody = $("panel-body");
const toastBox = $("toasts");

endpointInput.value = `ws://${location.hostname || "127.0.0.1"}:3371/`;
editor.value = localStorage.getItem("virtcam.script") ?? DEFAULT_SCRIPT;
editor.addEventListener("input", () => {
  localStorage.setItem("virtcam.script", editor.value);
  highlight.style.display = "none";
});

let session: Session | null = null;
let drawTimes: number[] = [];

function toast(message: string): void {
  const node = document.createElement("div");
  node.className = "toast";
  node.textContent = message;
  toastBox.appendChild(node);
  setTimeout(() => node.remove(), 4000);
}

function appendConsole(kind: string, text: string): void {
  const line = document.createElement("div");
  line.className = `line ${kind}`;
  line.textContent = text;
  consoleLog.appendChild(line);
  while (consoleLog.childElementCount > 500) {
    consoleLog.firstElementChild?.remove();
  }
  consoleLog.scrollTop = consoleLog.scrollHeight;
}

clearButton.addEventListener("click", () => {
  consoleLog.textContent = "";
});

function markErrorLine(line: number | null): void {
  if (line === null) {
    highlight.style.display = "none";
    return;
  }
  const lineHeight = parseFloat(getComputedStyle(editor).lineHeight) || 18;
  highlight.style.display = "block";
  highlight.style.top = `${(line - 1) * lineHeight - editor.scrollTop}px`;
  highlight.style.height = `${lineHeight}px`;
  editor.scrollTop = Math.max(0, (line - 3) * lineHeight);
}

function drawPlaceholder(message: string): void {
  viewerCanvas.width = 320;
  viewerCanvas.height = 240;
  const ctx = viewerCanvas.getContext("2d");
  if (ctx === null) {
    return;
  }
  ctx.fillStyle = "#181d23";
  ctx.fillRect(0, 0, viewerCanvas.width, viewerCanvas.height);
  ctx.fillStyle = "#5c6773";
  ctx.font = "14px sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(message, viewerCanvas.width / 2, viewerCanvas.height / 2);
}

async function drawFrame(jpeg: Uint8Array, width: number, height: number): Promise<void> {
  const blob = new Blob([jpeg.slice()], { type: "image/jpeg" });
  let bitmap: ImageBitmap;
  try {
    bitmap = await createImageBitmap(blob);
  } catch (err) {
    console.warn("frame decode failed", err);
    return;
  }
  viewerCanvas.width = width;
  viewerCanvas.height = height;
  viewerCanvas.getContext("2d")?.drawImage(bitmap, 0, 0);
  bitmap.close();

  const now = performance.now();
  drawTimes.push(now);
  drawTimes = drawTimes.filter((t) => now - t < 2000);
  fpsLabel.textContent = `${(drawTimes.length / 2).toFixed(1)} fps`;

  const framesize = session?.attrs.get("framesize") ?? "?";
  const expected = framesizeDims(framesize);
  const match = expected !== null && expected[0] === width && expected[1] === height;
  dimsLabel.textContent = `${width}×${height} (framesize ${framesize}${match ? "" : ", stale"})`;
}

// --- sensor control panel ---------------------------------------------------

interface WidgetSpec {
  name: string;
  kind: "enum" | "toggle" | "range" | "text";
  options?: string[];
  min?: number;
  max?: number;
}

const PANEL: WidgetSpec[] = [
  { name: "framesize", kind: "enum", options: ["QQVGA", "QVGA", "VGA"] },
  { name: "pixformat", kind: "enum", options: ["GRAYSCALE8", "RGB565"] },
  { name: "window", kind: "text" },
  { name: "hmirror", kind: "toggle" },
  { name: "vflip", kind: "toggle" },
  { name: "brightness", kind: "range", min: -128, max: 127 },
  { name: "contrast", kind: "range", min: 0, max: 512 },
  { name: "led.red", kind: "toggle" },
  { name: "led.green", kind: "toggle" },
  { name: "led.blue", kind: "toggle" },
  { name: "led.ir", kind: "toggle" },
  { name: "jpeg.quality", kind: "range", min: 1, max: 100 },
  { name: "source", kind: "text" },
];

type WidgetSync = (value: string) => void;
const widgetSync = new Map<string, WidgetSync>();

function submitAttr(name: string, value: string, revert: WidgetSync): void {
  if (session === null) {
    return;
  }
  session.setAttr(name, value).catch((err: Error) => {
    toast(`${name}: ${err.message}`);
    revert(session?.attrs.get(name) ?? "");
  });
}

function buildPanel(): void {
  panelBody.textContent = "";
  widgetSync.clear();
  for (const spec of PANEL) {
    const row = document.createElement("label");
    row.className = "attr-row";
    const caption = document.createElement("span");
    caption.textContent = spec.name;
    row.appendChild(caption);

    if (spec.kind === "enum") {
      const select = document.createElement("select");
      for (const option of spec.options ?? []) {
        const node = document.createElement("option");
        node.value = option;
        node.textContent = option;
        select.appendChild(node);
      }
      select.addEventListener("change", () =>
        submitAttr(spec.name, select.value, (v) => { select.value = v; }));
      widgetSync.set(spec.name, (v) => {
        if (document.activeElement !== select) {
          if (![...select.options].some((o) => o.value === v)) {
            const extra = document.createElement("option");
            extra.value = v;
            extra.textContent = v;
            select.appendChild(extra);
          }
          select.value = v;
        }
      });
      row.appendChild(select);
    } else if (spec.kind === "toggle") {
      const box = document.createElement("input");
      box.type = "checkbox";
      box.addEventListener("change", () =>
        submitAttr(spec.name, box.checked ? "on" : "off",
                   (v) => { box.checked = v === "on"; }));
      widgetSync.set(spec.name, (v) => { box.checked = v === "on"; });
      row.appendChild(box);
    } else if (spec.kind === "range") {
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = String(spec.min ?? 0);
      slider.max = String(spec.max ?? 100);
      const value = document.createElement("span");
      value.className = "attr-value";
      slider.addEventListener("input", () => { value.textContent = slider.value; });
      slider.addEventListener("change", () =>
        submitAttr(spec.name, slider.value, (v) => {
          slider.value = v;
          value.textContent = v;
        }));
      widgetSync.set(spec.name, (v) => {
        if (document.activeElement !== slider) {
          slider.value = v;
          value.textContent = v;
        }
      });
      row.appendChild(slider);
      row.appendChild(value);
    } else {
      const input = document.createElement("input");
      input.type = "text";
      input.addEventListener("change", () =>
        submitAttr(spec.name, input.value, (v) => { input.value = v; }));
      widgetSync.set(spec.name, (v) => {
        if (document.activeElement !== input) {
          input.value = v;
        }
      });
      row.appendChild(input);
    }
    panelBody.appendChild(row);
  }
}

// --- session lifecycle -------------------------------------------------------

function attach(target: Session): void {
  target.on("state", (state) => {
    stateDot.className = `dot ${state}`;
    stateLabel.textContent = state;
    connectButton.textContent = state === "closed" || state === "idle"
      ? "Connect" : "Disconnect";
    if (state === "connected") {
      startPollingFromSelect();
    }
  });
  target.on("console", (line) => appendConsole(line.kind, line.text));
  target.on("status", (text) => { statusLabel.textContent = text; });
  target.on("toast", toast);
  target.on("scriptError", (_message, line) => markErrorLine(line));
  target.on("done", (status, steps) => {
    appendConsole("info", `script finished: ${status} after ${steps} steps`);
  });
  target.on("frame", (frame) => {
    if (frame === null) {
      drawPlaceholder("no frame yet");
    } else {
      void drawFrame(frame.jpeg, frame.width, frame.height);
    }
  });
  target.on("attrs", (attrs) => {
    for (const [name, value] of attrs) {
      widgetSync.get(name)?.(value);
    }
  });
}

function startPollingFromSelect(): void {
  const interval = parseInt(pollSelect.value, 10);
  if (session !== null && interval > 0) {
    session.startPolling(interval);
  } else {
    session?.stopPolling();
  }
}

pollSelect.addEventListener("change", startPollingFromSelect);

connectButton.addEventListener("click", () => {
  if (session !== null && session.state !== "closed") {
    session.close();
    session = null;
    return;
  }
  session = new Session(endpointInput.value);
  attach(session);
  session.connect();
});

runButton.addEventListener("click", () => {
  if (session === null) {
    toast("connect first");
    return;
  }
  markErrorLine(null);
  session.runScript(editor.value).catch((err: Error) => toast(err.message));
});

stopButton.addEventListener("click", () => {
  session?.stopScript().catch((err: Error) => toast(err.message));
});

buildPanel();
drawPlaceholder("not connected");
statusLabel.textContent = "idle";

// surfaced for quick poking from the devtools console
declare global {
  interface Window { virtcam?: { session: () => Session | null; parseErrorLine: typeof parseErrorLine }; }
}
window.virtcam = { session: () => session, parseErrorLine };
