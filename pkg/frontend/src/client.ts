/**
 * Gateway connection: decodes and dispatches server messages, validates
 * outgoing commands, reconnects with backoff, and tracks snapshot
 * sequence numbers and stream staleness.
 */

import {
  ClientCommand,
  Hello,
  ServerMessage,
  Snapshot,
  decodeServerMessage,
  encodeCommand,
} from "./protocol.js";

export interface ClientHandlers {
  onHello?: (hello: Hello) => void;
  onSnapshot?: (snapshot: Snapshot) => void;
  onEnd?: (msg: Extract<ServerMessage, { type: "end" }>) => void;
  onServerError?: (message: string) => void;
  onConnectionChange?: (connected: boolean) => void;
  onSequenceGap?: (expected: number, got: number) => void;
}

type SocketFactory = (url: string) => WebSocket;

export class GatewayClient {
  private url: string;
  private handlers: ClientHandlers;
  private socketFactory: SocketFactory;
  private socket: WebSocket | null = null;
  private lastSeq = 0;
  private backoffMs = 250;
  private closed = false;
  lastSnapshotAt = 0;

  constructor(url: string, handlers: ClientHandlers, socketFactory?: SocketFactory) {
    this.url = url;
    this.handlers = handlers;
    this.socketFactory = socketFactory ?? ((u) => new WebSocket(u));
  }

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    const ws = this.socketFactory(this.url);
    this.socket = ws;
    this.lastSeq = 0;
    ws.onopen = () => {
      this.backoffMs = 250;
      this.handlers.onConnectionChange?.(true);
    };
    ws.onmessage = (event: MessageEvent) => {
      let msg: ServerMessage;
      try {
        msg = decodeServerMessage(String(event.data));
      } catch (err) {
        console.error("undecodable server message", err);
        return;
      }
      this.dispatch(msg);
    };
    ws.onclose = () => {
      this.handlers.onConnectionChange?.(false);
      if (!this.closed) {
        setTimeout(() => this.open(), this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, 5000);
      }
    };
    ws.onerror = () => {
      /* close handler drives the reconnect */
    };
  }

  private dispatch(msg: ServerMessage): void {
    switch (msg.type) {
      case "hello":
        this.handlers.onHello?.(msg);
        break;
      case "snapshot":
        if (this.lastSeq && msg.seq !== this.lastSeq + 1) {
          this.handlers.onSequenceGap?.(this.lastSeq + 1, msg.seq);
        }
        this.lastSeq = msg.seq;
        this.lastSnapshotAt = Date.now();
        this.handlers.onSnapshot?.(msg);
        break;
      case "ack":
        break;
      case "error":
        this.handlers.onServerError?.(msg.message);
        break;
      case "end":
        this.handlers.onEnd?.(msg);
        break;
    }
  }

  /** Validates against the shared protocol before transmitting. */
  send(cmd: ClientCommand): void {
    if (!this.socket || this.socket.readyState !== 1) {
      throw new Error("not connected");
    }
    this.socket.send(encodeCommand(cmd));
  }

  isStale(nowMs: number, thresholdMs = 1000): boolean {
    return this.lastSnapshotAt > 0 && nowMs - this.lastSnapshotAt > thresholdMs;
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
