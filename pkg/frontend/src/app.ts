/** Labeling session controller: poll, render, label, summarize. */

import { ApiClient, NextResponse, QueryInfo, StatusResponse, waitForQuestion } from "./api.js";
import { renderTrajectory } from "./render.js";

export interface AppElements {
  svg: SVGElement;
  roundCounter: HTMLElement;
  questionInfo: HTMLElement;
  queryList: HTMLElement;
  statusLine: HTMLElement;
  yesButton: HTMLButtonElement;
  noButton: HTMLButtonElement;
  summary: HTMLElement;
}

export class LabelApp {
  private pending: NextResponse | null = null;
  private inFlight = false;

  constructor(private api: ApiClient, private ui: AppElements) {}

  async run(): Promise<void> {
    this.bindInputs();
    for (;;) {
      const st = await waitForQuestion(this.api);
      this.showStatus(st);
      await this.refreshQueries();
      if (st.state !== "idle") {
        await this.showSummary(st);
        return;
      }
      const next = await this.api.next();
      this.showQuestion(next);
      await this.awaitAnswer();
    }
  }

  private answerResolve: (() => void) | null = null;

  private awaitAnswer(): Promise<void> {
    return new Promise((resolve) => {
      this.answerResolve = resolve;
    });
  }

  bindInputs(): void {
    this.ui.yesButton.addEventListener("click", () => void this.submitLabel(1));
    this.ui.noButton.addEventListener("click", () => void this.submitLabel(0));
    document.addEventListener("keydown", (ev) => {
      if (ev.key === "y") void this.submitLabel(1);
      if (ev.key === "n") void this.submitLabel(0);
    });
  }

  showStatus(st: StatusResponse): void {
    this.ui.roundCounter.textContent = `round ${st.round}`;
    const f1 = st.median_f1 === null ? "n/a" : st.median_f1.toFixed(3);
    this.ui.statusLine.textContent =
      `${st.state} | consistent queries: ${st.num_consistent} | median F1: ${f1}`;
  }

  showQuestion(next: NextResponse): void {
    this.pending = next;
    renderTrajectory(this.ui.svg, next.frames);
    this.ui.questionInfo.textContent =
      `Does trajectory ${next.trajectory_id} match? (J = ${next.J.toFixed(2)})`;
    this.setButtonsEnabled(true);
  }

  /** Posts the label for the pending question; a second call is a no-op. */
  async submitLabel(label: 0 | 1): Promise<void> {
    if (this.pending === null || this.inFlight) return;
    this.inFlight = true;
    this.setButtonsEnabled(false);
    try {
      const result = await this.api.label(this.pending.trajectory_id, label);
      if (result.stale) {
        this.ui.questionInfo.textContent = "stale question — refreshing";
      }
      this.pending = null;
      this.answerResolve?.();
      this.answerResolve = null;
    } finally {
      this.inFlight = false;
    }
  }

  private setButtonsEnabled(enabled: boolean): void {
    this.ui.yesButton.disabled = !enabled;
    this.ui.noButton.disabled = !enabled;
  }

  async refreshQueries(): Promise<QueryInfo[]> {
    const queries = await this.api.queries();
    this.ui.queryList.replaceChildren();
    for (const q of queries) {
      const li = document.createElement("li");
      const acc = q.train_accuracy === null ? "n/a" : q.train_accuracy.toFixed(2);
      li.textContent = `${q.query}   [train acc ${acc}]`;
      this.ui.queryList.appendChild(li);
    }
    return queries;
  }

  async showSummary(st: StatusResponse): Promise<void> {
    const queries = await this.refreshQueries();
    const f1 = st.median_f1 === null ? "n/a" : st.median_f1.toFixed(3);
    this.ui.summary.textContent =
      st.state === "done"
        ? `Session complete after round ${st.round}: ${queries.length} consistent ` +
          `quer${queries.length === 1 ? "y" : "ies"}, median F1 ${f1}.`
        : `Session ${st.state}.`;
    this.setButtonsEnabled(false);
    this.ui.questionInfo.textContent = "";
  }
}

export function mount(root: Document = document): LabelApp | null {
  const byId = (id: string) => root.getElementById(id);
  const svg = byId("scene");
  if (!svg) return null;
  const app = new LabelApp(new ApiClient(""), {
    svg: svg as unknown as SVGElement,
    roundCounter: byId("round")!,
    questionInfo: byId("question")!,
    queryList: byId("queries")!,
    statusLine: byId("status")!,
    yesButton: byId("yes") as HTMLButtonElement,
    noButton: byId("no") as HTMLButtonElement,
    summary: byId("summary")!,
  });
  void app.run();
  return app;
}

declare const window: (Window & { __TRAJSYNTH_TEST__?: boolean }) | undefined;

if (typeof window !== "undefined" && typeof document !== "undefined" &&
    !window.__TRAJSYNTH_TEST__ && document.getElementById("scene")) {
  mount();
}
