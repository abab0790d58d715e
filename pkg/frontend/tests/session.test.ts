import { describe, expect, it } from "vitest";
import { controls } from "../src/render.js";
import { DebugSession } from "../src/session.js";
import { FakeTransport } from "./helpers.js";

// Minimal canned server: two threads, no real semantics needed to
// exercise the session's bookkeeping.

const STATE = {
  step: 0,
  globals: { g: 0 },
  threads: {
    A: { locals: { x: 1 }, line: 10, status: "runnable" },
    B: { locals: { y: 2 }, line: 20, status: "runnable" },
  },
};

function ok(id: number, payload: object): object {
  return { id, ok: true, payload };
}

function basicResponder(overrides: Record<string, (req: any) => object[]> = {}) {
  let step = 0;
  return (req: { id: number; cmd: string; args?: any }): object[] => {
    const custom = overrides[req.cmd];
    if (custom) return custom(req);
    switch (req.cmd) {
      case "load":
        return [ok(req.id, { loaded: true, threads: ["A", "B"], engines: ["incremental-ss"], active: "incremental-ss", step: 0 })];
      case "state":
        return [ok(req.id, { ...STATE, step })];
      case "enabled":
        return [ok(req.id, { threads: ["A", "B"] })];
      case "mem":
        return [ok(req.id, { step, state_ints: 3, ledgers: [{ engine: "incremental-ss", saved_ints: step, aux_log_ints: 0, retained_revcode_cmds: 0 }] })];
      case "step":
        step += 1;
        return [
          { event: "switch", seq: step, from: null, to: req.args.thread },
          ok(req.id, { step, entry: { seq: step, thread: req.args.thread, line: 10, lhs: "x", kind: "plain-assign" } }),
        ];
      case "back":
        step -= 1;
        return [ok(req.id, { stepped_back: 1, step })];
      default:
        return [{ id: req.id, ok: false, error: { code: "unknown-command", message: req.cmd } }];
    }
  };
}

const SPEC = { source: "int g := 0\n", constants: {}, engines: ["incremental-ss"] };

async function connected(responder = basicResponder()) {
  const fake = new FakeTransport();
  fake.responder = responder;
  const session = new DebugSession();
  await session.connect(fake, SPEC);
  return { session, fake };
}

describe("back button at the origin", () => {
  it("sends nothing and stays clean", async () => {
    const { session, fake } = await connected();
    const sent = fake.sent.length;
    await session.backOne();
    expect(fake.sent.length).toBe(sent);
    expect(session.view.error).toBeNull();
    expect(controls(session.view).backEnabled).toBe(false);
  });
});

describe("server errors", () => {
  it("render verbatim in the banner without breaking the session", async () => {
    const { session } = await connected(
      basicResponder({
        step: (req) => [
          { id: req.id, ok: false, error: { code: "not-enabled", message: "thread 'A' is not enabled" } },
        ],
      }),
    );
    const stateBefore = session.view.state;
    await session.stepThread("A");
    expect(session.view.error).toBe("not-enabled: thread 'A' is not enabled");
    expect(session.view.connected).toBe(true);
    expect(session.view.state).toBe(stateBefore);
    expect(session.view.timeline).toEqual([]);
  });

  it("a later successful click clears the banner", async () => {
    let failOnce = true;
    const { session } = await connected(
      basicResponder({
        step: (req) => {
          if (failOnce) {
            failOnce = false;
            return [{ id: req.id, ok: false, error: { code: "not-enabled", message: "nope" } }];
          }
          return [ok(req.id, { step: 1, entry: { seq: 1, thread: "A", line: 10, lhs: "x", kind: "plain-assign" } })];
        },
      }),
    );
    await session.stepThread("A");
    expect(session.view.error).not.toBeNull();
    await session.stepThread("A");
    expect(session.view.error).toBeNull();
  });
});

describe("transport loss", () => {
  it("shows a banner and allows a retry with a fresh transport", async () => {
    const fake = new FakeTransport();
    const session = new DebugSession();
    const attempt = session.connect(fake, SPEC);
    fake.fail(new Error("connection refused"));
    await attempt;
    expect(session.view.error).toBe("connection refused");
    expect(session.view.connected).toBe(false);

    const good = new FakeTransport();
    good.responder = basicResponder();
    await session.connect(good, SPEC);
    expect(session.view.error).toBeNull();
    expect(session.view.connected).toBe(true);
  });
});

describe("switch markers", () => {
  it("accumulate on steps, truncate on back, and do not duplicate on re-steps", async () => {
    const { session } = await connected();
    await session.stepThread("A");
    await session.stepThread("B");
    await session.stepThread("A");
    expect(session.view.switchMarkers.map((s) => s.seq)).toEqual([1, 2, 3]);

    await session.backOne();
    await session.backOne();
    expect(session.view.switchMarkers.map((s) => s.seq)).toEqual([1]);

    await session.stepThread("B");
    expect(session.view.switchMarkers.map((s) => s.seq)).toEqual([1, 2]);
    expect(session.view.timeline.map((e) => e.seq)).toEqual([1, 2]);
  });
});

describe("busy flag", () => {
  it("locks controls while a request is in flight", async () => {
    const fake = new FakeTransport();
    const session = new DebugSession();
    // no responder: requests hang until answered by hand
    const pendingStates: boolean[] = [];
    session.onChange(() => pendingStates.push(session.view.busy));
    const connecting = session.connect(fake, SPEC);
    expect(session.view.busy).toBe(true);
    expect(controls(session.view).stepButtons.every((b) => !b.enabled)).toBe(true);

    const responder = basicResponder();
    for (const line of fake.sent.splice(0)) {
      for (const msg of responder(JSON.parse(line))) fake.lineCb(JSON.stringify(msg));
    }
    // answer the follow-up state/enabled requests as they appear
    fake.responder = responder;
    for (const line of fake.sent.splice(0)) {
      for (const msg of responder(JSON.parse(line))) fake.lineCb(JSON.stringify(msg));
    }
    await connecting;
    expect(session.view.busy).toBe(false);
    expect(pendingStates[0]).toBe(true);
    expect(pendingStates[pendingStates.length - 1]).toBe(false);
  });
});

describe("inspector", () => {
  it("holds the selected entry's reverse code", async () => {
    const { session } = await connected(
      basicResponder({
        revcode: (req) => [
          ok(req.id, {
            available: true,
            seq: req.args.seq,
            target: "x",
            steps: ["x := x - 1"],
            text: "x := x - 1",
            provenance: { technique: "extract-from-use", seq: 2, loc: "x", children: [] },
          }),
        ],
      }),
    );
    await session.stepThread("A");
    await session.selectEntry(1);
    expect(session.view.inspector?.available).toBe(true);
    expect(session.view.inspector?.text).toBe("x := x - 1");
  });
});

describe("end events", () => {
  it("records termination and clears it when stepping back", async () => {
    // Wrap the default responder instead of overriding "step": the shared
    // counter must keep advancing or the follow-up state reply would report
    // step 0 and the back button would stay disabled.
    const base = basicResponder();
    const { session } = await connected((req) => {
      const msgs = base(req);
      if (req.cmd === "step") msgs.splice(msgs.length - 1, 0, { event: "terminated", step: 1 });
      return msgs;
    });
    await session.stepThread("A");
    expect(session.view.ended).toEqual({ event: "terminated", step: 1 });
    await session.backOne();
    expect(session.view.ended).toBeNull();
  });
});

describe("breakpoints", () => {
  it("toggle through the break command and mirror the server list", async () => {
    const bps: [string, number][] = [];
    const { session } = await connected(
      basicResponder({
        break: (req) => {
          const { thread, line, remove } = req.args;
          if (remove) {
            const i = bps.findIndex(([t, l]) => t === thread && l === line);
            if (i >= 0) bps.splice(i, 1);
          } else {
            bps.push([thread, line]);
          }
          return [ok(req.id, { breakpoints: [...bps] })];
        },
      }),
    );
    await session.toggleBreakpoint("A", 10);
    expect(session.view.breakpoints).toEqual([["A", 10]]);
    await session.toggleBreakpoint("A", 10);
    expect(session.view.breakpoints).toEqual([]);
  });
});
