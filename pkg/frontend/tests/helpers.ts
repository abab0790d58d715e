import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { expect } from "vitest";
import type { TapeLine } from "../src/client.js";
import type { StatePayload } from "../src/protocol.js";
import { variableRows } from "../src/render.js";
import { DebugSession } from "../src/session.js";
import type { Transport } from "../src/transport.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
export const FIXTURES = path.join(HERE, "..", "fixtures");

export interface Clicks {
  constants: Record<string, number>;
  engines: string[];
  steps: string[];
  backs: number;
  selects: number[];
}

export interface Fidelity {
  lines: TapeLine[];
  switchesLen: number;
  finalStep: number;
}

export function loadClicks(): Clicks {
  return JSON.parse(fs.readFileSync(path.join(FIXTURES, "clicks.json"), "utf8"));
}

export function loadFidelity(): Fidelity {
  return JSON.parse(fs.readFileSync(path.join(FIXTURES, "fidelity.json"), "utf8"));
}

export function loadProgram(): string {
  return fs.readFileSync(path.join(FIXTURES, "bounded-buffer.mcl"), "utf8");
}

/** Replays a recorded tape: each send must match the recording, and
 * the recorded server lines that followed it are delivered back. */
export class ReplayTransport implements Transport {
  private pos = 0;
  private lineCb: (line: string) => void = () => {};

  constructor(private lines: TapeLine[]) {}

  send(line: string): void {
    const expected = this.lines[this.pos];
    if (!expected || expected.dir !== "send") {
      throw new Error(`unexpected send at tape position ${this.pos}: ${line}`);
    }
    if (expected.text !== line) {
      throw new Error(
        `tape divergence at position ${this.pos}\n  expected: ${expected.text}\n  got:      ${line}`,
      );
    }
    this.pos++;
    while (this.pos < this.lines.length && this.lines[this.pos]!.dir === "recv") {
      const text = this.lines[this.pos]!.text;
      this.pos++;
      this.lineCb(text);
    }
  }

  get exhausted(): boolean {
    return this.pos === this.lines.length;
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(): void {}
  close(): void {}
}

/** Hand-driven transport for unit tests: collects sends, optionally
 * answers them through a responder. */
export class FakeTransport implements Transport {
  sent: string[] = [];
  lineCb: (line: string) => void = () => {};
  closeCb: (err?: Error) => void = () => {};
  closed = false;
  responder: ((req: { id: number; cmd: string; args?: Record<string, unknown> }) => object[]) | null =
    null;

  send(line: string): void {
    this.sent.push(line);
    if (this.responder) {
      const req = JSON.parse(line);
      for (const msg of this.responder(req)) {
        this.lineCb(JSON.stringify(msg));
      }
    }
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: (err?: Error) => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.closed = true;
  }

  fail(err: Error): void {
    this.closeCb(err);
  }
}

/** Asserts that every variable row shows exactly the value in the
 * latest state payload the server sent, and that nothing is missing. */
export function checkDisplayedValues(session: DebugSession, payload: StatePayload): void {
  const rows = variableRows(session.view);
  const want = new Map<string, unknown>();
  for (const [name, value] of Object.entries(payload.globals)) {
    want.set(`global.${name}`, value);
  }
  for (const [thread, ts] of Object.entries(payload.threads)) {
    for (const [name, value] of Object.entries(ts.locals)) {
      want.set(`${thread}.${name}`, value);
    }
  }
  expect(rows.length).toBe(want.size);
  for (const row of rows) {
    expect(row.value).toEqual(want.get(`${row.scope}.${row.name}`));
  }
}

function lastStatePayload(session: DebugSession): StatePayload {
  for (let i = session.tape.length - 1; i >= 0; i--) {
    const line = session.tape[i]!;
    if (line.dir !== "recv") continue;
    const msg = JSON.parse(line.text);
    if (msg.ok && msg.payload && "globals" in msg.payload) {
      return msg.payload as StatePayload;
    }
  }
  throw new Error("no state response on the tape");
}

/** Drives the scripted click sequence, checking after every click
 * that the view shows the state payload from that click's traffic. */
export async function runClickScript(
  session: DebugSession,
  transport: Transport,
  clicks: Clicks,
  source: string,
): Promise<void> {
  await session.connect(transport, {
    source,
    constants: clicks.constants,
    engines: clicks.engines,
  });
  expect(session.view.error).toBeNull();
  checkDisplayedValues(session, lastStatePayload(session));

  for (const thread of clicks.steps) {
    await session.stepThread(thread);
    expect(session.view.error).toBeNull();
    checkDisplayedValues(session, lastStatePayload(session));
  }
  for (let i = 0; i < clicks.backs; i++) {
    await session.backOne();
    expect(session.view.error).toBeNull();
    checkDisplayedValues(session, lastStatePayload(session));
  }
  for (const seq of clicks.selects) {
    await session.selectEntry(seq);
    expect(session.view.error).toBeNull();
    expect(session.view.inspector?.seq).toBe(seq);
  }
}
