// Transport abstraction: the console core only needs a line-oriented socket.
// The browser uses a WebSocket adapter; tests drive the same code through a
// Node `ws` client against the live service.

import { CommandMessage, ServerMessage, encodeCommand, parseServerMessage } from "./protocol";

export interface WireSocket {
  send(text: string): void;
  close(): void;
  set onmessage(cb: (text: string) => void);
  set onopen(cb: () => void);
  set onclose(cb: () => void);
}

/** Adapter over the DOM WebSocket (also satisfied by the `ws` package). */
export function wrapWebSocket(ws: {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, listener: (event: any) => void): void;
}): WireSocket {
  let messageCb: (text: string) => void = () => undefined;
  let openCb: () => void = () => undefined;
  let closeCb: () => void = () => undefined;
  ws.addEventListener("message", (event: { data: unknown }) => {
    messageCb(String(event.data));
  });
  ws.addEventListener("open", () => openCb());
  ws.addEventListener("close", () => closeCb());
  ws.addEventListener("error", () => closeCb());
  return {
    send: (text) => ws.send(text),
    close: () => ws.close(),
    set onmessage(cb: (text: string) => void) {
      messageCb = cb;
    },
    set onopen(cb: () => void) {
      openCb = cb;
    },
    set onclose(cb: () => void) {
      closeCb = cb;
    },
  };
}

export type MessageHandler = (message: ServerMessage) => void;

/**
 * Line-framed session client. WebSocket frames carry exactly one message, but
 * the parser also tolerates several newline-separated messages per delivery
 * (the raw NDJSON dialect).
 */
export class SessionClient {
  private socket: WireSocket;
  private handlers: MessageHandler[] = [];
  private openHandlers: Array<() => void> = [];
  private closeHandlers: Array<() => void> = [];
  private buffer = "";

  constructor(socket: WireSocket) {
    this.socket = socket;
    socket.onmessage = (text) => this.feed(text);
    socket.onopen = () => this.openHandlers.forEach((cb) => cb());
    socket.onclose = () => this.closeHandlers.forEach((cb) => cb());
  }

  private feed(text: string): void {
    this.buffer += text;
    let index: number;
    while ((index = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, index);
      this.buffer = this.buffer.slice(index + 1);
      const message = parseServerMessage(line);
      if (message) this.handlers.forEach((cb) => cb(message));
    }
    // A frame without a trailing newline still holds one complete message.
    if (this.buffer.trim().length > 0 && this.buffer.endsWith("}")) {
      try {
        const message = parseServerMessage(this.buffer);
        this.buffer = "";
        if (message) this.handlers.forEach((cb) => cb(message));
      } catch {
        // incomplete JSON: keep buffering
      }
    }
  }

  onMessage(cb: MessageHandler): void {
    this.handlers.push(cb);
  }

  onOpen(cb: () => void): void {
    this.openHandlers.push(cb);
  }

  onClose(cb: () => void): void {
    this.closeHandlers.push(cb);
  }

  send(command: CommandMessage): void {
    this.socket.send(encodeCommand(command));
  }

  close(): void {
    this.socket.close();
  }
}
