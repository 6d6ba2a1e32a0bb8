// Thin WebSocket wrapper: parse frames, hand well-formed messages to the
// caller, expose send/close. No session logic lives here.

import { encodeClientMessage, parseServerMessage } from "./protocol.js";
import type { ClientMessage, ServerMessage } from "./protocol.js";

export interface SessionSocket {
  send(msg: ClientMessage): void;
  close(): void;
}

export interface SocketEvents {
  onOpen(): void;
  onMessage(msg: ServerMessage): void;
  onClose(): void;
}

export function connect(url: string, events: SocketEvents): SessionSocket {
  const socket = new WebSocket(url);
  socket.onopen = () => events.onOpen();
  socket.onmessage = (event) => {
    if (typeof event.data !== "string") return;
    const msg = parseServerMessage(event.data);
    if (msg !== null) events.onMessage(msg);
  };
  socket.onclose = () => events.onClose();
  socket.onerror = () => socket.close();
  return {
    send(msg: ClientMessage): void {
      if (socket.readyState === WebSocket.OPEN) {
        socket.send(encodeClientMessage(msg));
      }
    },
    close(): void {
      socket.close();
    },
  };
}
