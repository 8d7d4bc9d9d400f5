import init, { outline_preview, repetition_report, route_preview } from "./pkg/nodemind_wasm_demo.js";

const PALETTE = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"];
const $ = (id) => document.getElementById(id);
const SVG = "http://www.w3.org/2000/svg";

function el(name, attrs, text) {
  const e = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) e.setAttribute(k, v);
  if (text !== undefined) e.textContent = text;
  return e;
}

function drawOutline() {
  const out = JSON.parse(outline_preview($("outline").value));
  const svg = $("canvas");
  svg.replaceChildren();
  const list = $("violations");
  list.replaceChildren();
  if (out.error) {
    const li = document.createElement("li");
    li.className = "bad";
    li.textContent = out.error;
    list.append(li);
    return;
  }
  const pad = 20;
  const byId = new Map(out.nodes.map((n) => [n.id, n]));
  const height = Math.max(...out.nodes.map((n) => n.y)) + 2 * pad + 20;
  svg.setAttribute("height", height);
  for (const n of out.nodes) {
    if (n.parent === null) continue;
    const p = byId.get(n.parent);
    svg.append(el("path", {
      d: `M${p.x + pad + 160},${p.y + pad} C${p.x + pad + 190},${p.y + pad} ${n.x + pad - 30},${n.y + pad} ${n.x + pad},${n.y + pad}`,
      fill: "none", stroke: "#999",
    }));
  }
  for (const n of out.nodes) {
    const color = PALETTE[n.color_index % PALETTE.length];
    svg.append(el("rect", { x: n.x + pad, y: n.y + pad - 14, width: 160, height: 28, rx: 6, fill: color, "fill-opacity": n.depth === 1 ? 1 : 0.75 }));
    const label = n.text.length > 24 ? n.text.slice(0, 23) + "…" : n.text;
    const t = el("text", { x: n.x + pad + 8, y: n.y + pad + 4, fill: "#fff", "font-size": 12 }, label);
    t.append(el("title", {}, n.text));
    svg.append(t);
  }
  for (const v of out.violations) {
    const li = document.createElement("li");
    li.textContent = `${v.kind} at entry ${v.location}: ${v.detail}`;
    list.append(li);
  }
}

function checkRepetition() {
  const threshold = parseFloat($("threshold").value) || 0.5;
  const out = JSON.parse(repetition_report($("candidate").value, $("references").value, threshold));
  $("rate").textContent = `Repetition rate ${out.rate.toFixed(3)}: ${out.redundant ? "rejected as redundant" : "accepted"}`;
  $("rate").className = out.redundant ? "bad" : "";
  $("tokens").replaceChildren(...out.tokens.map((t) => {
    const s = document.createElement("span");
    s.className = t.repeated ? "tok rep" : "tok";
    s.textContent = t.token;
    return s;
  }));
}

function routeQuery() {
  const out = JSON.parse(route_preview($("query").value));
  $("category").textContent = out.error ? out.error : `Template: ${out.category}`;
  $("system").textContent = out.system ?? "";
}

await init();
$("outline").addEventListener("input", drawOutline);
for (const id of ["candidate", "references", "threshold"]) $(id).addEventListener("input", checkRepetition);
$("query").addEventListener("input", routeQuery);
drawOutline();
checkRepetition();
routeQuery();
