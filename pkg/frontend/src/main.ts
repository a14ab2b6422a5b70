// Browser wiring: canvas, pointer drags, the parameter panel and the
// animation-frame paint loop.

import { dragToHandMove, newThrottle } from "./drag.js";
import { ConsoleClient } from "./net.js";
import { paint, render } from "./render.js";
import { setParams, setPlane } from "./state.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function main(): void {
  const canvas = byId<HTMLCanvasElement>("view");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas unsupported");

  const host = location.hostname || "127.0.0.1";
  const port = new URLSearchParams(location.search).get("port") ?? "8750";
  const client = new ConsoleClient(`ws://${host}:${port}/ws`, () => undefined);
  client.connect();

  const throttle = newThrottle();
  let dragging = false;

  const viewport = () => ({ width: canvas.width, height: canvas.height });

  function sendDrag(event: PointerEvent): void {
    const rect = canvas.getBoundingClientRect();
    const message = dragToHandMove(
      client.view,
      viewport(),
      ((event.clientX - rect.left) / rect.width) * canvas.width,
      ((event.clientY - rect.top) / rect.height) * canvas.height,
      performance.now(),
      throttle,
    );
    if (message) client.send(message);
  }

  canvas.addEventListener("pointerdown", (event) => {
    dragging = true;
    canvas.setPointerCapture(event.pointerId);
    sendDrag(event);
  });
  canvas.addEventListener("pointermove", (event) => {
    if (dragging) sendDrag(event);
  });
  canvas.addEventListener("pointerup", (event) => {
    dragging = false;
    canvas.releasePointerCapture(event.pointerId);
  });

  byId<HTMLButtonElement>("plane-toggle").addEventListener("click", () => {
    const next = client.view.plane === "top" ? "side" : "top";
    client.update(setPlane(client.view, next));
    byId<HTMLButtonElement>("plane-toggle").textContent = `plane: ${next}`;
  });
  byId<HTMLButtonElement>("pause").addEventListener("click", () => client.send({ type: "pause" }));
  byId<HTMLButtonElement>("resume").addEventListener("click", () => client.send({ type: "resume" }));
  byId<HTMLButtonElement>("reset").addEventListener("click", () => client.send({ type: "reset" }));

  const bindParam = (
    id: string,
    name: "retreat_speed" | "v_max" | "theta_obs",
    toWire: (ui: number) => number,
  ) => {
    byId<HTMLInputElement>(id).addEventListener("change", (event) => {
      const value = Number((event.target as HTMLInputElement).value);
      if (!Number.isFinite(value)) return;
      client.send({ type: "set_param", name, value: toWire(value) });
      const key = name === "theta_obs" ? "theta_obs_deg" : name;
      client.update(setParams(client.view, { [key]: value }));
    });
  };
  bindParam("param-retreat", "retreat_speed", (v) => v);
  bindParam("param-vmax", "v_max", (v) => v);
  bindParam("param-theta", "theta_obs", (deg) => (deg * Math.PI) / 180);

  const errorLine = byId<HTMLDivElement>("error-line");
  function frame(): void {
    paint(ctx!, render(client.view, viewport(), performance.now()));
    errorLine.textContent = client.view.lastError ?? "";
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

window.addEventListener("load", main);
