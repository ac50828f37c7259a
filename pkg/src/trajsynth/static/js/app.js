/** Labeling session controller: poll, render, label, summarize. */
import { ApiClient, waitForQuestion } from "./api.js";
import { renderTrajectory } from "./render.js";
export class LabelApp {
    constructor(api, ui) {
        this.api = api;
        this.ui = ui;
        this.pending = null;
        this.inFlight = false;
        this.answerResolve = null;
    }
    async run() {
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
    awaitAnswer() {
        return new Promise((resolve) => {
            this.answerResolve = resolve;
        });
    }
    bindInputs() {
        this.ui.yesButton.addEventListener("click", () => void this.submitLabel(1));
        this.ui.noButton.addEventListener("click", () => void this.submitLabel(0));
        document.addEventListener("keydown", (ev) => {
            if (ev.key === "y")
                void this.submitLabel(1);
            if (ev.key === "n")
                void this.submitLabel(0);
        });
    }
    showStatus(st) {
        this.ui.roundCounter.textContent = `round ${st.round}`;
        const f1 = st.median_f1 === null ? "n/a" : st.median_f1.toFixed(3);
        this.ui.statusLine.textContent =
            `${st.state} | consistent queries: ${st.num_consistent} | median F1: ${f1}`;
    }
    showQuestion(next) {
        this.pending = next;
        renderTrajectory(this.ui.svg, next.frames);
        this.ui.questionInfo.textContent =
            `Does trajectory ${next.trajectory_id} match? (J = ${next.J.toFixed(2)})`;
        this.setButtonsEnabled(true);
    }
    /** Posts the label for the pending question; a second call is a no-op. */
    async submitLabel(label) {
        if (this.pending === null || this.inFlight)
            return;
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
        }
        finally {
            this.inFlight = false;
        }
    }
    setButtonsEnabled(enabled) {
        this.ui.yesButton.disabled = !enabled;
        this.ui.noButton.disabled = !enabled;
    }
    async refreshQueries() {
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
    async showSummary(st) {
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
export function mount(root = document) {
    const byId = (id) => root.getElementById(id);
    const svg = byId("scene");
    if (!svg)
        return null;
    const app = new LabelApp(new ApiClient(""), {
        svg: svg,
        roundCounter: byId("round"),
        questionInfo: byId("question"),
        queryList: byId("queries"),
        statusLine: byId("status"),
        yesButton: byId("yes"),
        noButton: byId("no"),
        summary: byId("summary"),
    });
    void app.run();
    return app;
}
if (typeof window !== "undefined" && typeof document !== "undefined" &&
    !window.__TRAJSYNTH_TEST__ && document.getElementById("scene")) {
    mount();
}
