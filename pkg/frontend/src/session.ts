/**
 * Debugger session view model.
 *
 * Every displayed value is a verbatim copy of the most recent server
 * payload. The model keeps no program semantics of its own: stepping,
 * undo, reverse code, and memory accounting all come from responses;
 * the only local bookkeeping is which payload is current, the timeline
 * of step entries, and switch markers accumulated from event lines
 * (truncated on back, mirroring the server's own log rewind).
 */

import { DebugClient, ServerError } from "./client.js";
import type {
  BackPayload,
  BreakPayload,
  EnabledPayload,
  EndEvent,
  LoadPayload,
  MemPayload,
  PathEntryWire,
  RevcodePayload,
  ServerEvent,
  StatePayload,
  StepPayload,
  SwitchEvent,
} from "./protocol.js";
import type { Transport } from "./transport.js";

export interface LoadSpec {
  source: string;
  constants: Record<string, number>;
  engines: string[];
}

export interface MemSample {
  step: number;
  ledgers: MemPayload["ledgers"];
}

export interface ViewModel {
  connected: boolean;
  busy: boolean;
  error: string | null;
  threads: string[];
  engines: string[];
  step: number;
  state: StatePayload | null;
  prevState: StatePayload | null;
  enabled: string[];
  timeline: PathEntryWire[];
  switchMarkers: SwitchEvent[];
  mem: MemPayload | null;
  memHistory: MemSample[];
  inspector: RevcodePayload | null;
  breakpoints: [string, number][];
  ended: EndEvent | null;
}

function emptyView(): ViewModel {
  return {
    connected: false,
    busy: false,
    error: null,
    threads: [],
    engines: [],
    step: 0,
    state: null,
    prevState: null,
    enabled: [],
    timeline: [],
    switchMarkers: [],
    mem: null,
    memHistory: [],
    inspector: null,
    breakpoints: [],
    ended: null,
  };
}

export class DebugSession {
  readonly view: ViewModel = emptyView();
  private client: DebugClient | null = null;
  private changeCb: () => void = () => {};

  onChange(cb: () => void): void {
    this.changeCb = cb;
  }

  get tape() {
    return this.client ? this.client.tape : [];
  }

  /** Connect and load: issues load, state, enabled. */
  async connect(transport: Transport, spec: LoadSpec): Promise<void> {
    this.client = new DebugClient(transport);
    this.client.onEvent((ev) => this.onEvent(ev));
    await this.guarded(async () => {
      const load = (await this.client!.request("load", {
        source: spec.source,
        constants: spec.constants,
        engines: spec.engines,
      })) as unknown as LoadPayload;
      this.view.threads = load.threads;
      this.view.engines = load.engines;
      this.view.step = load.step;
      this.view.timeline = [];
      this.view.switchMarkers = [];
      this.view.memHistory = [];
      this.view.inspector = null;
      this.view.breakpoints = [];
      this.view.ended = null;
      await this.refreshState();
      await this.refreshEnabled();
      this.view.connected = true;
    });
  }

  /** Re-attach after transport loss; the server kept the session, so
   * re-fetch what the view shows instead of reloading the program. */
  async reconnect(transport: Transport): Promise<void> {
    this.client = new DebugClient(transport);
    this.client.onEvent((ev) => this.onEvent(ev));
    await this.guarded(async () => {
      await this.refreshState();
      await this.refreshEnabled();
      await this.refreshMem();
      const payload = await this.client!.request("path", { from: 1, to: this.view.step });
      this.view.timeline = (payload.entries as PathEntryWire[]) ?? [];
      this.view.connected = true;
    });
  }

  /** One click on a thread button: step, then state/enabled/mem. */
  async stepThread(thread: string): Promise<void> {
    await this.guarded(async () => {
      const payload = (await this.client!.request("step", {
        thread,
      })) as unknown as StepPayload;
      this.view.step = payload.step;
      this.view.timeline = this.view.timeline.slice(0, payload.step - 1);
      this.view.timeline.push(payload.entry);
      await this.refreshState();
      await this.refreshEnabled();
      await this.refreshMem();
    });
  }

  /** One click on the back button. At the origin the control is
   * disabled and no request goes out. */
  async backOne(): Promise<void> {
    if (this.view.step === 0) return;
    await this.guarded(async () => {
      const payload = (await this.client!.request("back", {
        n: 1,
      })) as unknown as BackPayload;
      this.view.step = payload.step;
      this.truncateTo(payload.step);
      this.view.ended = null;
      await this.refreshState();
      await this.refreshEnabled();
      await this.refreshMem();
    });
  }

  /** Inspector selection: fetch reverse code for a timeline entry. */
  async selectEntry(seq: number): Promise<void> {
    await this.guarded(async () => {
      const payload = (await this.client!.request("revcode", {
        seq,
      })) as unknown as RevcodePayload;
      this.view.inspector = payload;
    });
  }

  async toggleBreakpoint(thread: string, line: number): Promise<void> {
    const has = this.view.breakpoints.some(([t, l]) => t === thread && l === line);
    await this.guarded(async () => {
      const args: Record<string, unknown> = { thread, line };
      if (has) args.remove = true;
      const payload = (await this.client!.request("break", args)) as unknown as BreakPayload;
      this.view.breakpoints = payload.breakpoints;
    });
  }

  close(): void {
    this.client?.close();
    this.view.connected = false;
    this.changed();
  }

  private async refreshState(): Promise<void> {
    const payload = (await this.client!.request("state")) as unknown as StatePayload;
    this.view.prevState = this.view.state;
    this.view.state = payload;
    this.view.step = payload.step;
  }

  private async refreshEnabled(): Promise<void> {
    const payload = (await this.client!.request("enabled")) as unknown as EnabledPayload;
    this.view.enabled = payload.threads;
  }

  private async refreshMem(): Promise<void> {
    const payload = (await this.client!.request("mem")) as unknown as MemPayload;
    this.view.mem = payload;
    this.view.memHistory.push({ step: payload.step, ledgers: payload.ledgers });
  }

  private truncateTo(step: number): void {
    this.view.timeline = this.view.timeline.filter((e) => e.seq <= step);
    this.view.switchMarkers = this.view.switchMarkers.filter((s) => s.seq <= step);
  }

  private onEvent(ev: ServerEvent): void {
    if (ev.event === "switch") {
      const sw = ev as SwitchEvent;
      this.view.switchMarkers = this.view.switchMarkers.filter((s) => s.seq < sw.seq);
      this.view.switchMarkers.push(sw);
    } else if (ev.event === "terminated" || ev.event === "deadlock") {
      this.view.ended = ev as EndEvent;
    }
    // block-entry events matter only for replay, not for the view
  }

  /** Serialize clicks, surface failures as a banner without touching
   * the rest of the view. */
  private async guarded(body: () => Promise<void>): Promise<void> {
    if (this.client === null) {
      this.view.error = "not connected";
      this.changed();
      return;
    }
    this.view.busy = true;
    this.view.error = null;
    this.changed();
    try {
      await body();
    } catch (err) {
      if (err instanceof ServerError) {
        this.view.error = `${err.code}: ${err.message}`;
      } else {
        this.view.error = err instanceof Error ? err.message : String(err);
        this.view.connected = false;
      }
    } finally {
      this.view.busy = false;
      this.changed();
    }
  }

  private changed(): void {
    this.changeCb();
  }
}
