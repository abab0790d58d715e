/**
 * Protocol client: one in-flight request at a time, raw traffic tape.
 *
 * The tape records every line exactly as sent or received, because the
 * fidelity tests diff it byte-for-byte against a recorded session; the
 * client never re-serializes a server line.
 */

import {
  encodeRequest,
  isEvent,
  parseServerLine,
  type ErrResponse,
  type Request,
  type ServerEvent,
} from "./protocol.js";
import type { Transport } from "./transport.js";

export interface TapeLine {
  dir: "send" | "recv";
  text: string;
}

export class ServerError extends Error {
  constructor(
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class TransportClosed extends Error {}

interface Pending {
  id: number;
  resolve: (payload: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class DebugClient {
  readonly tape: TapeLine[] = [];
  private nextId = 1;
  private pending: Pending | null = null;
  private queue: (() => void)[] = [];
  private eventCb: (ev: ServerEvent) => void = () => {};
  private closed = false;

  constructor(private transport: Transport) {
    transport.onLine((line) => this.handleLine(line));
    transport.onClose((err) => this.handleClose(err));
  }

  onEvent(cb: (ev: ServerEvent) => void): void {
    this.eventCb = cb;
  }

  /** Send a command and await its payload. Requests are serialized:
   * a second call waits until the first response arrives. */
  request(cmd: string, args?: Record<string, unknown>): Promise<Record<string, unknown>> {
    return new Promise((resolve, reject) => {
      const fire = () => {
        if (this.closed) {
          reject(new TransportClosed("connection closed"));
          this.pump();
          return;
        }
        const req: Request = { id: this.nextId++, cmd };
        if (args !== undefined) req.args = args;
        const text = encodeRequest(req);
        this.pending = {
          id: req.id,
          resolve: (payload) => {
            this.pending = null;
            resolve(payload);
            this.pump();
          },
          reject: (err) => {
            this.pending = null;
            reject(err);
            this.pump();
          },
        };
        this.tape.push({ dir: "send", text });
        this.transport.send(text);
      };
      if (this.pending === null) fire();
      else this.queue.push(fire);
    });
  }

  get busy(): boolean {
    return this.pending !== null;
  }

  close(): void {
    this.transport.close();
  }

  private pump(): void {
    const next = this.queue.shift();
    if (next) next();
  }

  private handleLine(line: string): void {
    this.tape.push({ dir: "recv", text: line });
    const msg = parseServerLine(line);
    if (isEvent(msg)) {
      this.eventCb(msg);
      return;
    }
    const p = this.pending;
    if (p === null || (msg.id !== null && msg.id !== p.id)) {
      // a response nobody is waiting for; taped, otherwise dropped
      return;
    }
    if (msg.ok) p.resolve(msg.payload);
    else {
      const err = (msg as ErrResponse).error;
      p.reject(new ServerError(err.code, err.message));
    }
  }

  private handleClose(err?: Error): void {
    this.closed = true;
    if (this.pending !== null) {
      this.pending.reject(err ?? new TransportClosed("connection closed"));
    }
  }
}
