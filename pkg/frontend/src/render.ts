/**
 * Pure view renderers: ViewModel in, plain display data out.
 *
 * The DOM shell binds these to elements; tests assert on them
 * directly. Nothing here computes program values — rows copy the
 * payload values untouched, and "changed" flags come from comparing
 * two payloads the server sent.
 */

import type { ProvenanceWire, VarValue } from "./protocol.js";
import type { ViewModel } from "./session.js";

export interface VarRow {
  scope: string; // "global" or a thread name
  name: string;
  value: VarValue;
  changed: boolean;
}

function sameValue(a: VarValue | undefined, b: VarValue): boolean {
  if (a === undefined) return true; // first render: nothing highlighted
  if (Array.isArray(a) && Array.isArray(b)) {
    return a.length === b.length && a.every((x, i) => x === b[i]);
  }
  return a === b;
}

export function variableRows(view: ViewModel): VarRow[] {
  const rows: VarRow[] = [];
  const cur = view.state;
  if (!cur) return rows;
  const prev = view.prevState;
  for (const [name, value] of Object.entries(cur.globals)) {
    rows.push({
      scope: "global",
      name,
      value,
      changed: !sameValue(prev?.globals[name], value),
    });
  }
  for (const [thread, ts] of Object.entries(cur.threads)) {
    for (const [name, value] of Object.entries(ts.locals)) {
      rows.push({
        scope: thread,
        name,
        value,
        changed: !sameValue(prev?.threads[thread]?.locals[name], value),
      });
    }
  }
  return rows;
}

export interface SourceLine {
  no: number;
  text: string;
  current: boolean;
  breakpoint: boolean;
}

export interface SourcePane {
  thread: string;
  status: string;
  lines: SourceLine[];
}

/** One pane per thread over the same program text; each pane
 * highlights its own thread's pending line and breakpoint gutter. */
export function sourcePanes(view: ViewModel, source: string): SourcePane[] {
  const textLines = source.split("\n");
  return view.threads.map((thread) => {
    const ts = view.state?.threads[thread];
    const bps = new Set(
      view.breakpoints.filter(([t]) => t === thread).map(([, line]) => line),
    );
    return {
      thread,
      status: ts?.status ?? "unknown",
      lines: textLines.map((text, i) => ({
        no: i + 1,
        text,
        current: ts?.line === i + 1,
        breakpoint: bps.has(i + 1),
      })),
    };
  });
}

export interface TimelineCell {
  seq: number;
  thread: string;
  line: number;
  colorIndex: number; // stable per thread, for css classes
  marker: boolean; // a context switch happened at this entry
}

export function timelineCells(view: ViewModel): TimelineCell[] {
  const markerSeqs = new Set(view.switchMarkers.map((s) => s.seq));
  return view.timeline.map((e) => ({
    seq: e.seq,
    thread: e.thread,
    line: e.line,
    colorIndex: Math.max(0, view.threads.indexOf(e.thread)),
    marker: markerSeqs.has(e.seq),
  }));
}

export function switchMarkerCount(view: ViewModel): number {
  return view.switchMarkers.length;
}

export interface ProvenanceNode {
  label: string;
  children: ProvenanceNode[];
}

function provenanceTree(p: ProvenanceWire): ProvenanceNode {
  const at = p.seq === null ? "" : ` @${p.seq}`;
  return {
    label: `${p.technique}${at} ${p.loc}`,
    children: p.children.map(provenanceTree),
  };
}

export interface InspectorView {
  seq: number;
  available: boolean;
  text: string;
  provenance: ProvenanceNode | null;
}

export function inspectorView(view: ViewModel): InspectorView | null {
  const r = view.inspector;
  if (!r) return null;
  if (!r.available) {
    return {
      seq: r.seq,
      available: false,
      text: `needs state saving: ${r.reason ?? ""}`,
      provenance: null,
    };
  }
  return {
    seq: r.seq,
    available: true,
    text: r.text ?? "",
    provenance: r.provenance ? provenanceTree(r.provenance) : null,
  };
}

export interface MemorySeries {
  engine: string;
  points: { step: number; savedInts: number }[];
}

export function memorySeries(view: ViewModel): MemorySeries[] {
  const byEngine = new Map<string, MemorySeries>();
  for (const engine of view.engines) {
    byEngine.set(engine, { engine, points: [] });
  }
  for (const sample of view.memHistory) {
    for (const ledger of sample.ledgers) {
      byEngine
        .get(ledger.engine)
        ?.points.push({ step: sample.step, savedInts: ledger.saved_ints });
    }
  }
  return [...byEngine.values()];
}

export interface Controls {
  stepButtons: { thread: string; enabled: boolean }[];
  backEnabled: boolean;
}

export function controls(view: ViewModel): Controls {
  const locked = view.busy || !view.connected;
  return {
    stepButtons: view.threads.map((thread) => ({
      thread,
      enabled: !locked && view.enabled.includes(thread),
    })),
    backEnabled: !locked && view.step > 0,
  };
}
