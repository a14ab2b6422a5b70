// Websocket client with automatic reconnect. The socket constructor is
// injectable so tests can drive the client with a scripted fake.

import { ClientFrame, parseServerFrame } from "./protocol.js";
import {
  Connection,
  ViewState,
  applyServerFrame,
  initialViewState,
  setConnection,
} from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  socketFactory?: SocketFactory;
  reconnectMs?: number;
  now?: () => number;
  setTimer?: (fn: () => void, ms: number) => unknown;
}

export class ConsoleClient {
  view: ViewState = initialViewState();

  private socket: SocketLike | null = null;
  private disposed = false;
  private readonly factory: SocketFactory;
  private readonly reconnectMs: number;
  private readonly now: () => number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;

  constructor(
    private readonly url: string,
    private readonly onChange: (view: ViewState) => void,
    options: ClientOptions = {},
  ) {
    this.factory = options.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.reconnectMs = options.reconnectMs ?? 1000;
    this.now = options.now ?? (() => Date.now());
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
  }

  connect(): void {
    if (this.disposed) return;
    this.update(setConnection(this.view, "connecting"));
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => this.update(setConnection(this.view, "open"));
    socket.onmessage = (event) => {
      const frame = parseServerFrame(event.data);
      if (frame !== null) {
        this.update(applyServerFrame(this.view, frame, this.now()));
      }
    };
    socket.onerror = () => {
      // the close handler owns reconnection
    };
    socket.onclose = () => {
      this.socket = null;
      this.update(setConnection(this.view, "closed"));
      if (!this.disposed) {
        this.setTimer(() => this.connect(), this.reconnectMs);
      }
    };
  }

  send(message: ClientFrame): boolean {
    if (this.socket === null || this.view.connection !== "open") return false;
    this.socket.send(JSON.stringify(message));
    return true;
  }

  dispose(): void {
    this.disposed = true;
    this.socket?.close();
    this.socket = null;
  }

  setConnectionForTest(connection: Connection): void {
    this.update(setConnection(this.view, connection));
  }

  update(view: ViewState): void {
    this.view = view;
    this.onChange(view);
  }
}
