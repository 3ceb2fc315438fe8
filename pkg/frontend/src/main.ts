/** DOM wire-up for the workbench page (index.html). */

import { ApiClient } from "./api.js";
import { frameAtPosition } from "./diagram.js";
import { Session } from "./session.js";
import { renderMesh } from "./viewport.js";

const DIAGRAM_MARGIN = 12;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

export function startApp(): void {
  const params = new URLSearchParams(window.location.search);
  const projectId = params.get("project") ?? "";
  const baseUrl = params.get("api") ?? "";
  const session = new Session(new ApiClient(baseUrl), projectId);

  const viewport = el<HTMLCanvasElement>("viewport");
  const diagram = el<HTMLCanvasElement>("diagram");
  const status = el<HTMLElement>("status");
  let yaw = 0;
  let pitch = 0;
  let playTimer: number | null = null;

  function drawDiagram(): void {
    const ctx = diagram.getContext("2d")!;
    const view = session.diagramView();
    const w = diagram.width;
    const h = diagram.height;
    ctx.fillStyle = "#1b2330";
    ctx.fillRect(0, 0, w, h);
    const plotW = w - 2 * DIAGRAM_MARGIN;
    const plotH = h - 2 * DIAGRAM_MARGIN;
    if (view.progressX !== null) {
      ctx.fillStyle = "#e53935";
      ctx.fillRect(DIAGRAM_MARGIN + view.progressX * plotW - 1, 0, 2, h);
    }
    for (const dot of view.dots) {
      ctx.fillStyle = dot.color;
      ctx.beginPath();
      ctx.arc(
        DIAGRAM_MARGIN + dot.x * plotW,
        h - DIAGRAM_MARGIN - dot.y * plotH,
        3,
        0,
        2 * Math.PI,
      );
      ctx.fill();
    }
  }

  function drawViewport(): void {
    if (session.mesh) {
      const ctx = viewport.getContext("2d")!;
      renderMesh(ctx, session.mesh, viewport.width, viewport.height, yaw, pitch);
    }
    viewport.style.opacity = session.staleFrame ? "0.4" : "1";
  }

  function redraw(): void {
    drawDiagram();
    drawViewport();
    el<HTMLElement>("frame-label").textContent =
      `frame ${session.currentFrame} / ${Math.max(session.frameCount - 1, 0)}`;
    status.textContent = session.lastError ?? "";
  }

  function stopPlayback(): void {
    if (playTimer !== null) {
      window.clearInterval(playTimer);
      playTimer = null;
    }
    session.playback = "stopped";
  }

  function play(direction: 1 | -1): void {
    stopPlayback();
    session.playback = direction === 1 ? "forward" : "backward";
    const fps = 25;
    playTimer = window.setInterval(async () => {
      const next = session.currentFrame + direction;
      if (next < 0 || next >= session.frameCount) {
        stopPlayback();
        return;
      }
      await session.seek(next);
      redraw();
    }, 1000 / fps);
  }

  diagram.addEventListener("click", async (event) => {
    const rect = diagram.getBoundingClientRect();
    const x =
      (event.clientX - rect.left - DIAGRAM_MARGIN) /
      (rect.width - 2 * DIAGRAM_MARGIN);
    await session.seek(frameAtPosition(session.points, x));
    redraw();
  });

  viewport.addEventListener("mousemove", (event) => {
    if (event.buttons === 1) {
      yaw += event.movementX * 0.01;
      pitch += event.movementY * 0.01;
      drawViewport();
    }
  });

  el<HTMLButtonElement>("btn-initialize").addEventListener("click", async () => {
    await session.initialize();
    redraw();
  });
  el<HTMLButtonElement>("btn-back").addEventListener("click", async () => {
    stopPlayback();
    await session.stepBackward();
    redraw();
  });
  el<HTMLButtonElement>("btn-forward").addEventListener("click", async () => {
    stopPlayback();
    await session.stepForward();
    redraw();
  });
  el<HTMLButtonElement>("btn-play").addEventListener("click", () => play(1));
  el<HTMLButtonElement>("btn-play-back").addEventListener("click", () =>
    play(-1),
  );
  el<HTMLButtonElement>("btn-stop").addEventListener("click", stopPlayback);
  el<HTMLButtonElement>("btn-adjust").addEventListener("click", async () => {
    await session.adjust(
      el<HTMLInputElement>("field-target").value,
      el<HTMLInputElement>("field-value").value,
    );
    redraw();
  });
  el<HTMLButtonElement>("btn-apply-pref").addEventListener("click", async () => {
    await session.applyPreference();
    redraw();
  });
  el<HTMLButtonElement>("btn-clear-pref").addEventListener("click", async () => {
    await session.clearPreference();
    redraw();
  });
  el<HTMLButtonElement>("btn-add-keyframe").addEventListener(
    "click",
    async () => {
      await session.addKeyframe();
      redraw();
    },
  );
  el<HTMLButtonElement>("btn-export").addEventListener("click", async () => {
    const doc = await session.exportResults();
    if (doc) {
      const blob = new Blob([JSON.stringify(doc)], {
        type: "application/json",
      });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = `${projectId}-animation.json`;
      link.click();
      URL.revokeObjectURL(link.href);
    }
    redraw();
  });

  session
    .load()
    .then(redraw)
    .catch((err) => {
      status.textContent = Session.describeError(err);
    });
}

startApp();
