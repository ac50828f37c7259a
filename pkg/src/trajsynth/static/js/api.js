/** Typed client for the labeling service's JSON API. */
export class ApiClient {
    constructor(baseUrl = "") {
        this.baseUrl = baseUrl;
    }
    async getJson(path) {
        const res = await fetch(this.baseUrl + path);
        if (!res.ok)
            throw new Error(`GET ${path} failed: ${res.status}`);
        return (await res.json());
    }
    status() {
        return this.getJson("/api/status");
    }
    next() {
        return this.getJson("/api/next");
    }
    queries() {
        return this.getJson("/api/queries");
    }
    transcript() {
        return this.getJson("/api/transcript");
    }
    /** Posts one label; a 409 means the question went stale (not an error). */
    async label(trajectoryId, label) {
        const res = await fetch(this.baseUrl + "/api/label", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ trajectory_id: trajectoryId, label }),
        });
        if (res.status === 409)
            return { accepted: false, stale: true };
        if (!res.ok)
            throw new Error(`POST /api/label failed: ${res.status}`);
        const body = (await res.json());
        return { accepted: body.accepted, stale: false };
    }
}
/** Polls until the session is waiting for a label or finished. */
export async function waitForQuestion(api, opts = {}) {
    const interval = opts.intervalMs ?? 150;
    const deadline = Date.now() + (opts.timeoutMs ?? 120000);
    for (;;) {
        const st = await api.status();
        if (st.state === "idle" || st.state === "done" || st.state === "aborted")
            return st;
        if (Date.now() > deadline)
            throw new Error("timed out waiting for the service");
        await new Promise((r) => setTimeout(r, interval));
    }
}
