// HTML rendering as plain string builders so the pieces stay testable
// without a browser. main.ts owns the actual DOM.

import type { SessionModel } from "./model.js";
import { canChoose } from "./model.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBanner(model: SessionModel): string {
  if (model.done !== null) {
    const reason = model.done.reason ? `: ${escapeHtml(model.done.reason)}` : "";
    return `<div class="banner ${model.done.status}">run finished — ${model.done.status}${reason}</div>`;
  }
  if (!model.connected) {
    return `<div class="banner idle">not connected</div>`;
  }
  if (model.prompt !== null) {
    return `<div class="banner waiting">your move — pick an alternative</div>`;
  }
  return `<div class="banner running">machine is moving…</div>`;
}

export function renderPrompt(model: SessionModel): string {
  if (!canChoose(model)) {
    return `<div class="prompt empty"></div>`;
  }
  const prompt = model.prompt!;
  const buttons = prompt.alternatives
    .map(
      (alt, i) =>
        `<button class="alt" data-index="${i}">${i + 1}) ${escapeHtml(alt)}</button>`,
    )
    .join("");
  return `<div class="prompt" data-choice-id="${prompt.choiceId}"><p>choose one:</p>${buttons}</div>`;
}

export function renderOutputs(model: SessionModel): string {
  const lines = model.outputs.map((line) => escapeHtml(line)).join("\n");
  return `<pre class="outputs">${lines}</pre>`;
}

export function renderTimeline(model: SessionModel): string {
  const entries = model.timeline
    .map((e) => `<li class="entry ${e.who}"><span>${e.who}</span> ${escapeHtml(e.text)}</li>`)
    .join("");
  return `<ul class="timeline">${entries}</ul>`;
}

export function renderSession(model: SessionModel): string {
  return [
    renderBanner(model),
    renderPrompt(model),
    `<h2>program output</h2>`,
    renderOutputs(model),
    `<h2>moves</h2>`,
    renderTimeline(model),
  ].join("\n");
}
