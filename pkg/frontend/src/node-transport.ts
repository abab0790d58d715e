import * as net from "node:net";
import { LineSplitter } from "./protocol.js";
import type { Transport } from "./transport.js";

/** Direct TCP connection to `retrograde serve --port`. Node only;
 * the browser shell goes through the websocket bridge instead. */
export class SocketTransport implements Transport {
  private splitter = new LineSplitter();
  private lineCb: (line: string) => void = () => {};
  private closeCb: (err?: Error) => void = () => {};

  private constructor(private sock: net.Socket) {
    sock.setEncoding("utf8");
    sock.on("data", (chunk: string) => {
      for (const line of this.splitter.feed(chunk)) this.lineCb(line);
    });
    sock.on("error", (err) => this.closeCb(err));
    sock.on("close", () => this.closeCb());
  }

  static connect(host: string, port: number, timeoutMs = 5000): Promise<SocketTransport> {
    return new Promise((resolve, reject) => {
      const sock = net.createConnection({ host, port });
      const timer = setTimeout(() => {
        sock.destroy();
        reject(new Error(`connect timeout after ${timeoutMs}ms`));
      }, timeoutMs);
      sock.once("connect", () => {
        clearTimeout(timer);
        resolve(new SocketTransport(sock));
      });
      sock.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  send(line: string): void {
    this.sock.write(line + "\n");
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: (err?: Error) => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.sock.end();
    this.sock.destroy();
  }
}
