import { LineSplitter } from "./protocol.js";
import type { Transport } from "./transport.js";

/** Browser side of the websocket-to-socket bridge (tools/bridge.mjs).
 * Each websocket message may carry one or more protocol lines. */
export class WsTransport implements Transport {
  private splitter = new LineSplitter();
  private lineCb: (line: string) => void = () => {};
  private closeCb: (err?: Error) => void = () => {};

  private constructor(private ws: WebSocket) {
    ws.onmessage = (ev) => {
      for (const line of this.splitter.feed(String(ev.data) + "\n")) this.lineCb(line);
    };
    ws.onerror = () => this.closeCb(new Error("websocket error"));
    ws.onclose = () => this.closeCb();
  }

  static connect(url: string): Promise<WsTransport> {
    return new Promise((resolve, reject) => {
      const ws = new WebSocket(url);
      ws.onopen = () => resolve(new WsTransport(ws));
      ws.onerror = () => reject(new Error(`cannot reach ${url}`));
    });
  }

  send(line: string): void {
    this.ws.send(line + "\n");
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: (err?: Error) => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.ws.close();
  }
}
