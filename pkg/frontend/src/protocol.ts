// Wire types for the choo session protocol: one JSON object per WebSocket
// frame (or per line over other transports). The playground never parses
// programs; everything it shows arrives through these messages.

export type ServerMessage =
  | { type: "choice_request"; choice_id: number; alternatives: string[] }
  | { type: "user_resolved"; choice_id: number; index: number }
  | { type: "machine_move"; branch_index: number; guard_text: string }
  | { type: "state"; bindings: Record<string, string> }
  | { type: "output"; text: string }
  | { type: "warning"; message: string }
  | { type: "error"; code: string; message: string }
  | { type: "done"; status: "success" | "failure"; reason?: string };

export type ClientMessage =
  | { type: "choice_response"; choice_id: number; index: number }
  | { type: "abort" };

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((v) => typeof v === "string");
}

function isStringRecord(value: unknown): value is Record<string, string> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) return false;
  return Object.values(value).every((v) => typeof v === "string");
}

// Returns null for anything that is not a well-formed server message, so a
// single bad frame cannot take the UI down.
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "choice_request":
      if (typeof msg.choice_id === "number" && isStringArray(msg.alternatives)) {
        return { type: "choice_request", choice_id: msg.choice_id, alternatives: msg.alternatives };
      }
      return null;
    case "user_resolved":
      if (typeof msg.choice_id === "number" && typeof msg.index === "number") {
        return { type: "user_resolved", choice_id: msg.choice_id, index: msg.index };
      }
      return null;
    case "machine_move":
      if (typeof msg.branch_index === "number" && typeof msg.guard_text === "string") {
        return { type: "machine_move", branch_index: msg.branch_index, guard_text: msg.guard_text };
      }
      return null;
    case "state":
      if (isStringRecord(msg.bindings)) {
        return { type: "state", bindings: msg.bindings };
      }
      return null;
    case "output":
      if (typeof msg.text === "string") return { type: "output", text: msg.text };
      return null;
    case "warning":
      if (typeof msg.message === "string") return { type: "warning", message: msg.message };
      return null;
    case "error":
      if (typeof msg.code === "string" && typeof msg.message === "string") {
        return { type: "error", code: msg.code, message: msg.message };
      }
      return null;
    case "done":
      if (msg.status === "success" || msg.status === "failure") {
        if (msg.reason === undefined) return { type: "done", status: msg.status };
        if (typeof msg.reason === "string") {
          return { type: "done", status: msg.status, reason: msg.reason };
        }
      }
      return null;
    default:
      return null;
  }
}

export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

export function choiceResponse(choiceId: number, index: number): ClientMessage {
  return { type: "choice_response", choice_id: choiceId, index };
}
