// Browser shell. Wires DebugSession to the page; all data shown comes
// from render.ts projections of the latest server payloads.

import {
  controls,
  inspectorView,
  memorySeries,
  sourcePanes,
  timelineCells,
  variableRows,
} from "./render.js";
import { DebugSession } from "./session.js";
import { WsTransport } from "./ws-transport.js";

const ENGINES = [
  "basic-ss",
  "incremental-ss",
  "checkpointing",
  "static-rcg",
  "dynamic-rcg",
];

const COLORS = ["#2f6fdd", "#d9822b", "#3f9e4d", "#a64ca6", "#c23b3b"];

let session = new DebugSession();
let programSource = "";

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

async function connectClicked() {
  const endpoint = (byId("endpoint") as HTMLInputElement).value;
  session = new DebugSession();
  session.onChange(renderAll);
  try {
    const transport = await WsTransport.connect(endpoint);
    await session.connect(transport, {
      source: programSource,
      constants: { M: 3, N: 5 },
      engines: ENGINES,
    });
  } catch (err) {
    session.view.error = err instanceof Error ? err.message : String(err);
    renderAll();
  }
}

function renderBanner() {
  const banner = byId("banner");
  banner.textContent = session.view.error ?? "";
  banner.style.display = session.view.error ? "block" : "none";
}

function renderControls() {
  const c = controls(session.view);
  const box = byId("controls");
  box.textContent = "";
  for (const btn of c.stepButtons) {
    const b = el("button", "step-btn", `step ${btn.thread}`) as HTMLButtonElement;
    b.disabled = !btn.enabled;
    b.onclick = () => void session.stepThread(btn.thread);
    box.appendChild(b);
  }
  const back = el("button", "back-btn", "back") as HTMLButtonElement;
  back.disabled = !c.backEnabled;
  back.onclick = () => void session.backOne();
  box.appendChild(back);
  const status = session.view.ended
    ? ` ${session.view.ended.event} at step ${session.view.ended.step}`
    : ` step ${session.view.step}`;
  box.appendChild(el("span", "step-count", status));
}

function renderSources() {
  const box = byId("sources");
  box.textContent = "";
  for (const pane of sourcePanes(session.view, programSource)) {
    const col = el("div", "pane");
    col.appendChild(el("h3", undefined, `${pane.thread} (${pane.status})`));
    const pre = el("pre", "source");
    for (const line of pane.lines) {
      const row = el("div", line.current ? "line current" : "line");
      const gutter = el("span", line.breakpoint ? "gutter bp" : "gutter", "●");
      gutter.onclick = () => void session.toggleBreakpoint(pane.thread, line.no);
      row.appendChild(gutter);
      row.appendChild(el("span", "lineno", String(line.no).padStart(3)));
      row.appendChild(el("span", "text", " " + line.text));
      pre.appendChild(row);
    }
    col.appendChild(pre);
    box.appendChild(col);
  }
}

function renderVariables() {
  const table = byId("variables");
  table.textContent = "";
  for (const row of variableRows(session.view)) {
    const tr = el("tr", row.changed ? "changed" : undefined);
    tr.appendChild(el("td", undefined, row.scope));
    tr.appendChild(el("td", undefined, row.name));
    tr.appendChild(el("td", undefined, JSON.stringify(row.value)));
    table.appendChild(tr);
  }
}

function renderTimeline() {
  const strip = byId("timeline");
  strip.textContent = "";
  for (const cell of timelineCells(session.view)) {
    if (cell.marker) strip.appendChild(el("span", "switch-marker", "|"));
    const node = el("span", "cell", String(cell.line));
    node.style.background = COLORS[cell.colorIndex % COLORS.length] ?? "#999";
    node.title = `#${cell.seq} ${cell.thread}:${cell.line}`;
    node.onclick = () => void session.selectEntry(cell.seq);
    strip.appendChild(node);
  }
}

function renderInspector() {
  const box = byId("inspector");
  box.textContent = "";
  const iv = inspectorView(session.view);
  if (!iv) return;
  box.appendChild(el("h3", undefined, `reverse code for #${iv.seq}`));
  box.appendChild(el("pre", iv.available ? "revcode" : "revcode missing", iv.text));
  if (iv.provenance) {
    const render = (node: typeof iv.provenance, depth: number) => {
      box.appendChild(el("div", "prov", "  ".repeat(depth) + node.label));
      for (const child of node.children) render(child, depth + 1);
    };
    render(iv.provenance, 0);
  }
}

function renderMemory() {
  const box = byId("memory");
  box.textContent = "";
  const series = memorySeries(session.view);
  const maxY = Math.max(1, ...series.flatMap((s) => s.points.map((p) => p.savedInts)));
  const maxX = Math.max(1, ...series.flatMap((s) => s.points.map((p) => p.step)));
  const svgNS = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(svgNS, "svg");
  svg.setAttribute("viewBox", "0 0 320 120");
  svg.setAttribute("class", "memchart");
  series.forEach((s, i) => {
    if (s.points.length === 0) return;
    const pts = s.points
      .map((p) => `${(p.step / maxX) * 310 + 5},${115 - (p.savedInts / maxY) * 110}`)
      .join(" ");
    const line = document.createElementNS(svgNS, "polyline");
    line.setAttribute("points", pts);
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", COLORS[i % COLORS.length] ?? "#999");
    svg.appendChild(line);
  });
  box.appendChild(svg);
  const legend = el("div", "legend");
  series.forEach((s, i) => {
    const item = el("span", "legend-item", s.engine);
    item.style.color = COLORS[i % COLORS.length] ?? "#999";
    legend.appendChild(item);
  });
  box.appendChild(legend);
  const mem = session.view.mem;
  if (mem) {
    const counts = mem.ledgers
      .map((l) => `${l.engine}=${l.saved_ints}`)
      .join("  ");
    box.appendChild(el("div", "mem-now", `saved ints: ${counts}`));
  }
}

function renderAll() {
  renderBanner();
  renderControls();
  renderSources();
  renderVariables();
  renderTimeline();
  renderInspector();
  renderMemory();
}

async function main() {
  programSource = await (await fetch("fixtures/bounded-buffer.mcl")).text();
  (byId("connect") as HTMLButtonElement).onclick = () => void connectClicked();
  renderAll();
}

void main();
