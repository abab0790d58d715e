import { describe, expect, it } from "vitest";
import { LineSplitter } from "../src/protocol.js";
import {
  controls,
  inspectorView,
  memorySeries,
  sourcePanes,
  timelineCells,
  variableRows,
} from "../src/render.js";
import { DebugSession } from "../src/session.js";

function view(partial: Partial<DebugSession["view"]>): DebugSession["view"] {
  const base = new DebugSession().view;
  return Object.assign(base, partial);
}

const STATE = {
  step: 3,
  globals: { g: 7, buf: [1, 2, 3] },
  threads: {
    P: { locals: { p: 2 }, line: 16, status: "runnable" },
    C: { locals: { c: 0 }, line: 31, status: "blocked" },
  },
};

describe("variables table", () => {
  it("copies payload values and flags changes against the previous payload", () => {
    const prev = {
      ...STATE,
      step: 2,
      globals: { g: 6, buf: [1, 2, 3] },
      threads: {
        P: { locals: { p: 2 }, line: 15, status: "runnable" },
        C: { locals: { c: 0 }, line: 31, status: "blocked" },
      },
    };
    const rows = variableRows(view({ state: STATE, prevState: prev }));
    const byKey = new Map(rows.map((r) => [`${r.scope}.${r.name}`, r]));
    expect(byKey.get("global.g")).toEqual({ scope: "global", name: "g", value: 7, changed: true });
    expect(byKey.get("global.buf")?.changed).toBe(false);
    expect(byKey.get("P.p")?.changed).toBe(false);
    expect(rows.length).toBe(4);
  });

  it("flags array element changes", () => {
    const prev = { ...STATE, globals: { g: 7, buf: [1, 2, 0] } };
    const rows = variableRows(view({ state: STATE, prevState: prev }));
    expect(rows.find((r) => r.name === "buf")?.changed).toBe(true);
  });

  it("highlights nothing on the first render", () => {
    const rows = variableRows(view({ state: STATE, prevState: null }));
    expect(rows.every((r) => !r.changed)).toBe(true);
  });
});

describe("source panes", () => {
  const SOURCE = "int g := 0\n\nthread P {\n  g := g + 1\n}\n";

  it("highlight each thread's pending line and its breakpoints", () => {
    const v = view({
      threads: ["P", "C"],
      state: {
        step: 0,
        globals: {},
        threads: {
          P: { locals: {}, line: 4, status: "runnable" },
          C: { locals: {}, line: null, status: "finished" },
        },
      },
      breakpoints: [["P", 4], ["C", 1]],
    });
    const panes = sourcePanes(v, SOURCE);
    expect(panes.length).toBe(2);
    const p = panes[0]!;
    expect(p.status).toBe("runnable");
    expect(p.lines.filter((l) => l.current).map((l) => l.no)).toEqual([4]);
    expect(p.lines.filter((l) => l.breakpoint).map((l) => l.no)).toEqual([4]);
    const c = panes[1]!;
    expect(c.lines.every((l) => !l.current)).toBe(true);
    expect(c.lines.filter((l) => l.breakpoint).map((l) => l.no)).toEqual([1]);
  });
});

describe("timeline", () => {
  it("colors by thread and marks switches", () => {
    const v = view({
      threads: ["P", "C"],
      timeline: [
        { seq: 1, thread: "P", line: 15, lhs: "empty", kind: "wait-decrement" },
        { seq: 2, thread: "P", line: 16, lhs: "buf[0]", kind: "plain-assign" },
        { seq: 3, thread: "C", line: 31, lhs: "full", kind: "wait-decrement" },
      ],
      switchMarkers: [
        { event: "switch", seq: 1, from: null, to: "P" },
        { event: "switch", seq: 3, from: "P", to: "C" },
      ],
    });
    const cells = timelineCells(v);
    expect(cells.map((c) => c.colorIndex)).toEqual([0, 0, 1]);
    expect(cells.map((c) => c.marker)).toEqual([true, false, true]);
  });
});

describe("inspector view", () => {
  it("renders generated code with its provenance tree", () => {
    const v = view({
      inspector: {
        available: true,
        seq: 9,
        target: "d",
        steps: ["d := g - 1"],
        text: "d := g - 1",
        provenance: {
          technique: "extract-from-use",
          seq: 9,
          loc: "d",
          children: [{ technique: "current", seq: null, loc: "g", children: [] }],
        },
      },
    });
    const iv = inspectorView(v)!;
    expect(iv.available).toBe(true);
    expect(iv.text).toBe("d := g - 1");
    expect(iv.provenance?.label).toBe("extract-from-use @9 d");
    expect(iv.provenance?.children[0]?.label).toBe("current g");
  });

  it("renders the state-saving fallback reason", () => {
    const v = view({
      inspector: { available: false, seq: 5, reason: "no restoring expression found" },
    });
    const iv = inspectorView(v)!;
    expect(iv.available).toBe(false);
    expect(iv.text).toContain("no restoring expression found");
    expect(iv.provenance).toBeNull();
  });
});

describe("memory chart", () => {
  it("builds one series per engine from mem history", () => {
    const v = view({
      engines: ["basic-ss", "dynamic-rcg"],
      memHistory: [
        {
          step: 1,
          ledgers: [
            { engine: "basic-ss", saved_ints: 22, aux_log_ints: 7, retained_revcode_cmds: 0 },
            { engine: "dynamic-rcg", saved_ints: 0, aux_log_ints: 7, retained_revcode_cmds: 1 },
          ],
        },
        {
          step: 2,
          ledgers: [
            { engine: "basic-ss", saved_ints: 44, aux_log_ints: 9, retained_revcode_cmds: 0 },
            { engine: "dynamic-rcg", saved_ints: 0, aux_log_ints: 9, retained_revcode_cmds: 2 },
          ],
        },
      ],
    });
    const series = memorySeries(v);
    expect(series.map((s) => s.engine)).toEqual(["basic-ss", "dynamic-rcg"]);
    expect(series[0]!.points).toEqual([
      { step: 1, savedInts: 22 },
      { step: 2, savedInts: 44 },
    ]);
    expect(series[1]!.points.map((p) => p.savedInts)).toEqual([0, 0]);
  });
});

describe("controls", () => {
  it("enable exactly the server's enabled threads", () => {
    const v = view({ connected: true, threads: ["P", "C"], enabled: ["P"], step: 3 });
    const c = controls(v);
    expect(c.stepButtons).toEqual([
      { thread: "P", enabled: true },
      { thread: "C", enabled: false },
    ]);
    expect(c.backEnabled).toBe(true);
  });

  it("lock everything while busy and before connecting", () => {
    const busy = controls(view({ connected: true, busy: true, threads: ["P"], enabled: ["P"], step: 1 }));
    expect(busy.stepButtons[0]?.enabled).toBe(false);
    expect(busy.backEnabled).toBe(false);
    const off = controls(view({ connected: false, threads: ["P"], enabled: ["P"], step: 1 }));
    expect(off.backEnabled).toBe(false);
  });
});

describe("line splitter", () => {
  it("reassembles frames across chunk boundaries", () => {
    const s = new LineSplitter();
    expect(s.feed('{"id":')).toEqual([]);
    expect(s.feed('1}\n{"id":2}\n{"id"')).toEqual(['{"id":1}', '{"id":2}']);
    expect(s.feed(":3}\n")).toEqual(['{"id":3}']);
  });
});
