/** A bidirectional line pipe to the server. Implementations exist for
 * a direct TCP socket (node) and a websocket bridge (browser). */
export interface Transport {
  send(line: string): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: (err?: Error) => void): void;
  close(): void;
}
