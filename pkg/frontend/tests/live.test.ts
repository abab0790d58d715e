// The same scripted clicks against a real server process. The traffic
// must match the recorded fixture line for line; a reconnect must find
// the session where it was left.

import { spawn, type ChildProcess } from "node:child_process";
import * as net from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { SocketTransport } from "../src/node-transport.js";
import { switchMarkerCount } from "../src/render.js";
import { DebugSession } from "../src/session.js";
import { loadClicks, loadFidelity, loadProgram, runClickScript } from "./helpers.js";

let server: ChildProcess;
let port: number;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = net.createServer();
    srv.listen(0, "127.0.0.1", () => {
      const addr = srv.address() as net.AddressInfo;
      srv.close(() => resolve(addr.port));
    });
    srv.on("error", reject);
  });
}

beforeAll(async () => {
  port = await freePort();
  server = spawn(
    "retrograde",
    ["serve", "--port", String(port), "--fixture", "bounded-buffer"],
    { stdio: ["ignore", "pipe", "inherit"] },
  );
  await new Promise<void>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 10_000);
    server.stdout!.on("data", (chunk: Buffer) => {
      if (chunk.toString().includes("listening on")) {
        clearTimeout(timer);
        resolve();
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited early: ${code}`)));
  });
}, 15_000);

afterAll(() => {
  server?.kill();
});

describe("scripted clicks against a live server", () => {
  it("produces traffic identical to the recording and keeps the session across reconnects", async () => {
    const fidelity = loadFidelity();
    const session = new DebugSession();
    const transport = await SocketTransport.connect("127.0.0.1", port);

    await runClickScript(session, transport, loadClicks(), loadProgram());

    expect(session.tape).toEqual(fidelity.lines);
    expect(session.view.step).toBe(fidelity.finalStep);
    expect(switchMarkerCount(session.view)).toBe(fidelity.switchesLen);

    // transport loss: the server holds the session, the view re-fetches
    const before = {
      state: session.view.state,
      enabled: [...session.view.enabled],
      step: session.view.step,
      timeline: session.view.timeline.map((e) => [e.seq, e.thread, e.line]),
    };
    transport.close();
    const again = await SocketTransport.connect("127.0.0.1", port);
    await session.reconnect(again);

    expect(session.view.error).toBeNull();
    expect(session.view.connected).toBe(true);
    expect(session.view.step).toBe(before.step);
    expect(session.view.state).toEqual(before.state);
    expect(session.view.enabled).toEqual(before.enabled);
    expect(session.view.timeline.map((e) => [e.seq, e.thread, e.line])).toEqual(before.timeline);
    again.close();
  }, 30_000);
});
