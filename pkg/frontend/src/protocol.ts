/**
 * Wire types for the debugger's newline-delimited JSON protocol.
 *
 * One JSON object per line in each direction. Requests carry an id;
 * the matching response echoes it. Event lines (no id) arrive before
 * the response of the command that caused them.
 */

export interface Request {
  id: number;
  cmd: string;
  args?: Record<string, unknown>;
}

export interface OkResponse {
  id: number;
  ok: true;
  payload: Record<string, unknown>;
}

export interface ErrResponse {
  id: number | null;
  ok: false;
  error: { code: string; message: string };
}

export type Response = OkResponse | ErrResponse;

export interface SwitchEvent {
  event: "switch";
  seq: number;
  from: string | null;
  to: string;
}

export interface BlockEntryEvent {
  event: "block-entry";
  thread: string;
  block: number;
}

export interface EndEvent {
  event: "terminated" | "deadlock";
  step: number;
}

export type ServerEvent = SwitchEvent | BlockEntryEvent | EndEvent;

export type ServerLine = Response | ServerEvent;

// Payload shapes, as the server serializes them.

export interface LoadPayload {
  loaded: boolean;
  threads: string[];
  engines: string[];
  active: string;
  step: number;
}

export interface PathEntryWire {
  seq: number;
  thread: string;
  line: number;
  lhs: string;
  kind: string;
}

export interface StepPayload {
  step: number;
  entry: PathEntryWire;
}

export interface BackPayload {
  stepped_back: number;
  step: number;
}

export type VarValue = number | number[];

export interface ThreadState {
  locals: Record<string, VarValue>;
  line: number | null;
  status: string;
}

export interface StatePayload {
  step: number;
  globals: Record<string, VarValue>;
  threads: Record<string, ThreadState>;
}

export interface EnabledPayload {
  threads: string[];
}

export interface ProvenanceWire {
  technique: string;
  seq: number | null;
  loc: string;
  children: ProvenanceWire[];
}

export interface RevcodePayload {
  available: boolean;
  seq: number;
  target?: string;
  steps?: string[];
  text?: string;
  reason?: string;
  provenance?: ProvenanceWire;
}

export interface LedgerWire {
  engine: string;
  saved_ints: number;
  aux_log_ints: number;
  retained_revcode_cmds: number;
}

export interface MemPayload {
  step: number;
  state_ints: number;
  ledgers: LedgerWire[];
}

export interface BreakPayload {
  breakpoints: [string, number][];
}

/** Serialize a request exactly as the session tape expects: compact,
 * keys in id/cmd/args order, args omitted when absent. */
export function encodeRequest(req: Request): string {
  const obj: Record<string, unknown> = { id: req.id, cmd: req.cmd };
  if (req.args !== undefined) obj.args = req.args;
  return JSON.stringify(obj);
}

export function parseServerLine(line: string): ServerLine {
  return JSON.parse(line) as ServerLine;
}

export function isEvent(msg: ServerLine): msg is ServerEvent {
  return "event" in msg;
}

/** Splits a byte stream into newline-delimited frames. Carries partial
 * trailing data across feed() calls. */
export class LineSplitter {
  private buffer = "";

  feed(chunk: string): string[] {
    this.buffer += chunk;
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    return lines.filter((l) => l.trim().length > 0);
  }
}
