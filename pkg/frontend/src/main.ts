// Playground entry point: connect to a running `choo serve --port N`,
// render the session, and forward clicks as choice responses.

import { connect } from "./client.js";
import type { SessionSocket } from "./client.js";
import {
  applyConnected,
  applyDisconnected,
  applyLocalAbort,
  applyLocalChoice,
  applyServer,
  canChoose,
  initialModel,
} from "./model.js";
import type { SessionModel } from "./model.js";
import { choiceResponse } from "./protocol.js";
import { renderSession } from "./view.js";

const app = document.getElementById("app")!;

const form = document.createElement("div");
form.className = "connect";
form.innerHTML = `
  <label>server <input id="url" value="ws://127.0.0.1:8765" size="28"></label>
  <button id="connect">connect</button>
  <button id="abort" disabled>abort</button>
`;
app.appendChild(form);

const session = document.createElement("div");
session.className = "session";
app.appendChild(session);

const urlInput = form.querySelector<HTMLInputElement>("#url")!;
const connectButton = form.querySelector<HTMLButtonElement>("#connect")!;
const abortButton = form.querySelector<HTMLButtonElement>("#abort")!;

let model: SessionModel = initialModel();
let socket: SessionSocket | null = null;

function redraw(): void {
  session.innerHTML = renderSession(model);
  abortButton.disabled = socket === null || model.done !== null;
  for (const button of session.querySelectorAll<HTMLButtonElement>("button.alt")) {
    button.onclick = () => {
      const index = Number(button.dataset.index);
      if (socket !== null && canChoose(model)) {
        socket.send(choiceResponse(model.prompt!.choiceId, index));
        model = applyLocalChoice(model, index);
        redraw();
      }
    };
  }
}

connectButton.onclick = () => {
  socket?.close();
  model = initialModel();
  socket = connect(urlInput.value, {
    onOpen() {
      model = applyConnected(model);
      redraw();
    },
    onMessage(msg) {
      model = applyServer(model, msg);
      redraw();
    },
    onClose() {
      model = applyDisconnected(model);
      socket = null;
      redraw();
    },
  });
  redraw();
};

abortButton.onclick = () => {
  if (socket !== null && model.done === null) {
    socket.send({ type: "abort" });
    model = applyLocalAbort(model);
    redraw();
  }
};

redraw();
