/**
 * Scripted session against a real served lane-turn instance: labels five
 * questions through the UI controller, checks the rendered scene, and
 * verifies the service transcript equals a headless run with the same
 * label sequence.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, waitForQuestion } from "../src/api.js";
import { timeColor } from "../src/color.js";
import { LabelApp, AppElements } from "../src/app.js";

const REPO = resolve(__dirname, "..", "..");
const PYTHON = process.env.PYTHON ?? "python3";
const PORT = 8770 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;

// lane-turn synthesis settings pinned so the session asks at least 5 questions
const GEN_ARGS = ["--scenario", "lane-turn", "--pos", "20", "--neg", "60", "--seed", "13"];
const LOOP_ARGS = ["--pos", "2", "--neg", "2", "--steps", "8", "--seed", "0"];

let workDir: string;
let datasetPath: string;
let labels: Record<string, number>;
let server: ChildProcess;

function cli(args: string[]): void {
  execFileSync(PYTHON, ["-m", "trajsynth.cli", ...args], { cwd: REPO, stdio: "pipe" });
}

async function serverReady(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/api/status`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service never came up");
    await new Promise((r) => setTimeout(r, 150));
  }
}

function uiElements(): AppElements {
  document.body.innerHTML = `
    <svg id="scene"></svg>
    <span id="round"></span>
    <p id="question"></p>
    <ul id="queries"></ul>
    <p id="status"></p>
    <button id="yes"></button>
    <button id="no"></button>
    <p id="summary"></p>`;
  return {
    svg: document.getElementById("scene") as unknown as SVGElement,
    roundCounter: document.getElementById("round")!,
    questionInfo: document.getElementById("question")!,
    queryList: document.getElementById("queries")!,
    statusLine: document.getElementById("status")!,
    yesButton: document.getElementById("yes") as HTMLButtonElement,
    noButton: document.getElementById("no") as HTMLButtonElement,
    summary: document.getElementById("summary")!,
  };
}

beforeAll(async () => {
  // the UI is served from the service's own origin; mirror that here so the
  // browser environment's same-origin policy admits the API calls
  (window as unknown as { happyDOM: { setURL(url: string): void } }).happyDOM.setURL(BASE);
  workDir = mkdtempSync(join(tmpdir(), "trajsynth-ui-"));
  datasetPath = join(workDir, "lane.json");
  cli(["gen", ...GEN_ARGS, "-o", datasetPath]);
  const doc = JSON.parse(readFileSync(datasetPath, "utf-8"));
  labels = Object.fromEntries(
    doc.trajectories.map((t: { id: string; label: number }) => [t.id, t.label]),
  );
  server = spawn(
    PYTHON,
    ["-m", "trajsynth.cli", "serve", datasetPath, "--scenario", "lane-turn",
     "--port", String(PORT), ...LOOP_ARGS],
    { cwd: REPO, stdio: "pipe" },
  );
  await serverReady();
});

afterAll(() => {
  server?.kill();
});

describe("scripted labeling session", () => {
  it("labels five questions and matches the headless transcript", async () => {
    const api = new ApiClient(BASE);
    const ui = uiElements();
    const app = new LabelApp(api, ui);

    let answered = 0;
    let sawGradient = false;
    let sawRegions = false;

    for (;;) {
      const st = await waitForQuestion(api, { timeoutMs: 120_000 });
      app.showStatus(st);
      if (st.state !== "idle") {
        await app.showSummary(st);
        break;
      }
      const next = await api.next();
      app.showQuestion(next);

      // rendered scene: red-to-green gradient and region overlays
      const segs = Array.from(ui.svg.querySelectorAll("line.trajectory-segment"));
      expect(segs.length).toBeGreaterThan(1);
      const red = (s: string | null) => Number(/rgb\((\d+),/.exec(s ?? "")![1]);
      const first = segs[0].getAttribute("stroke");
      const last = segs[segs.length - 1].getAttribute("stroke");
      expect(first).toBe(timeColor(0));
      expect(red(first)).toBeGreaterThan(red(last));
      if (red(first) > red(last)) sawGradient = true;
      if (ui.svg.querySelectorAll("path.region").length === 2) sawRegions = true;

      await app.submitLabel(labels[next.trajectory_id] as 0 | 1);
      answered += 1;
      if (answered > 40) throw new Error("session never converged");
    }

    expect(answered).toBeGreaterThanOrEqual(5);
    expect(sawGradient).toBe(true);
    expect(sawRegions).toBe(true);
    expect(ui.summary.textContent).toContain("Session complete");
    expect(ui.queryList.textContent).toContain("InRegion_1(A)");

    // the served transcript equals a headless run over the same labels
    const served = await api.transcript();
    const transcriptPath = join(workDir, "headless-transcript.json");
    cli(["synth", datasetPath, "--scenario", "lane-turn", "--oracle", "dataset-labels",
         ...LOOP_ARGS, "-o", join(workDir, "headless-synth.json"),
         "--transcript", transcriptPath]);
    const headless = JSON.parse(readFileSync(transcriptPath, "utf-8"));
    expect(served).toEqual(headless);
  });
});
