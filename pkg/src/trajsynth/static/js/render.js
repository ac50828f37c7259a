/** SVG rendering of a queried trajectory over its region annotations. */
import { timeColor } from "./color.js";
import { presentRuns, regionPath, sceneBounds, viewBox } from "./geometry.js";
const SVG_NS = "http://www.w3.org/2000/svg";
function el(tag, attrs) {
    const node = document.createElementNS(SVG_NS, tag);
    for (const [k, v] of Object.entries(attrs))
        node.setAttribute(k, v);
    return node;
}
/**
 * Draw the scene into `svg`: regions as dashed annotated polylines, each
 * object as a polyline whose segments shade from red to green over time,
 * with gaps where the object is untracked. Single present frames draw dots.
 */
export function renderTrajectory(svg, scene) {
    while (svg.firstChild)
        svg.removeChild(svg.firstChild);
    const bounds = sceneBounds(scene);
    if (bounds === null) {
        const note = el("text", { x: "8", y: "16", class: "empty-note" });
        note.textContent = "empty trajectory";
        svg.appendChild(note);
        return;
    }
    svg.setAttribute("viewBox", viewBox(bounds));
    const strokeW = Math.max(bounds.maxX - bounds.minX, bounds.maxY - bounds.minY) / 160;
    for (const region of scene.regions) {
        const path = el("path", {
            d: regionPath(region),
            class: "region",
            fill: "none",
            stroke: "#555",
            "stroke-width": String(strokeW * 0.9),
            "stroke-dasharray": `${strokeW * 2} ${strokeW * 2}`,
        });
        svg.appendChild(path);
        const [lx, ly] = region.polyline[0];
        const label = el("text", {
            x: String(lx),
            y: String(-ly - strokeW * 2),
            class: "region-label",
            "font-size": String(strokeW * 8),
            fill: "#555",
        });
        label.textContent = `region ${region.id}`;
        svg.appendChild(label);
    }
    for (const traj of scene.trajectories) {
        const denom = Math.max(traj.frames.length - 1, 1);
        for (let k = 0; k < scene.object_count; k++) {
            for (const run of presentRuns(traj.frames, k)) {
                if (run.length === 1) {
                    svg.appendChild(el("circle", {
                        cx: String(run[0].x),
                        cy: String(-run[0].y),
                        r: String(strokeW * 1.6),
                        class: "trajectory-dot",
                        fill: timeColor(run[0].t / denom),
                    }));
                    continue;
                }
                for (let i = 0; i + 1 < run.length; i++) {
                    const a = run[i];
                    const b = run[i + 1];
                    svg.appendChild(el("line", {
                        x1: String(a.x), y1: String(-a.y),
                        x2: String(b.x), y2: String(-b.y),
                        class: "trajectory-segment",
                        "data-object": String(k),
                        stroke: timeColor(a.t / denom),
                        "stroke-width": String(strokeW * 1.4),
                        "stroke-linecap": "round",
                    }));
                }
            }
        }
    }
}
