// Session state as a pure reducer over protocol messages. The view renders
// whatever is in the model; the model never touches the DOM or the socket.

import type { ServerMessage } from "./protocol.js";

export type Speaker = "user" | "machine" | "program" | "session";

export interface TimelineEntry {
  who: Speaker;
  text: string;
}

export interface PromptState {
  choiceId: number;
  alternatives: string[];
}

export interface SessionModel {
  timeline: TimelineEntry[];
  outputs: string[];
  // at most one request is outstanding at a time
  prompt: PromptState | null;
  done: { status: "success" | "failure"; reason?: string } | null;
  connected: boolean;
}

export function initialModel(): SessionModel {
  return { timeline: [], outputs: [], prompt: null, done: null, connected: false };
}

export function canChoose(model: SessionModel): boolean {
  return model.prompt !== null && model.done === null;
}

function pushed(model: SessionModel, entry: TimelineEntry): SessionModel {
  return { ...model, timeline: [...model.timeline, entry] };
}

export function applyConnected(model: SessionModel): SessionModel {
  return { ...pushed(model, { who: "session", text: "connected" }), connected: true };
}

export function applyDisconnected(model: SessionModel): SessionModel {
  const noted = model.connected
    ? pushed(model, { who: "session", text: "connection closed" })
    : model;
  return { ...noted, connected: false, prompt: null };
}

export function applyServer(model: SessionModel, msg: ServerMessage): SessionModel {
  if (model.done !== null) {
    // the server goes quiet after done; anything else is noise
    return model;
  }
  switch (msg.type) {
    case "choice_request": {
      const next = pushed(model, {
        who: "session",
        text: `choice #${msg.choice_id}: ${msg.alternatives.length} alternatives`,
      });
      return { ...next, prompt: { choiceId: msg.choice_id, alternatives: msg.alternatives } };
    }
    case "user_resolved":
      return pushed(model, {
        who: "user",
        text: `resolved choice #${msg.choice_id} with alternative ${msg.index}`,
      });
    case "machine_move":
      return pushed(model, {
        who: "machine",
        text: `took branch ${msg.branch_index} (${msg.guard_text})`,
      });
    case "state": {
      const shown = Object.entries(msg.bindings)
        .map(([name, value]) => `${name} = ${value}`)
        .join(", ");
      return pushed(model, { who: "machine", text: `state: ${shown === "" ? "(empty)" : shown}` });
    }
    case "output": {
      const next = pushed(model, { who: "program", text: msg.text });
      return { ...next, outputs: [...next.outputs, msg.text] };
    }
    case "warning":
      return pushed(model, { who: "session", text: `warning: ${msg.message}` });
    case "error":
      return pushed(model, { who: "session", text: `error (${msg.code}): ${msg.message}` });
    case "done": {
      const text = msg.reason === undefined ? `done: ${msg.status}` : `done: ${msg.status} (${msg.reason})`;
      const next = pushed(model, { who: "session", text });
      return { ...next, prompt: null, done: { status: msg.status, reason: msg.reason } };
    }
  }
}

// The user clicked an alternative: note the move locally and retire the
// prompt while the server decides what happens next.
export function applyLocalChoice(model: SessionModel, index: number): SessionModel {
  if (!canChoose(model)) return model;
  const prompt = model.prompt as PromptState;
  const label = prompt.alternatives[index] ?? `alternative ${index}`;
  const next = pushed(model, { who: "user", text: `picked ${index + 1}) ${label}` });
  return { ...next, prompt: null };
}

export function applyLocalAbort(model: SessionModel): SessionModel {
  if (model.done !== null) return model;
  return pushed(model, { who: "user", text: "abort requested" });
}
