import init, { StudioCore, agreement } from "./pkg/percept_wasm.js";

const $ = (id) => document.getElementById(id);
const SVG = "http://www.w3.org/2000/svg";

function el(tag, attrs = {}, text) {
  const node = document.createElementNS(SVG, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

// Horizontal bars. `range` is [lo, hi]; bars grow from `origin`.
function barChart(rows, { range, origin, format }) {
  const rowH = 20, labelW = 140, plotW = 360, width = labelW + plotW + 70;
  const svg = el("svg", { width, height: rows.length * rowH + 10 });
  const x = (v) => labelW + ((v - range[0]) / (range[1] - range[0])) * plotW;
  rows.forEach(([label, value], i) => {
    const y = 5 + i * rowH;
    svg.append(el("text", { x: labelW - 8, y: y + 13, "text-anchor": "end" }, label));
    const a = x(Math.min(origin, value)), b = x(Math.max(origin, value));
    svg.append(el("rect", { x: a, y: y + 3, width: Math.max(b - a, 1), height: rowH - 6, fill: value >= origin ? "#3b7dd8" : "#d8683b" }));
    svg.append(el("text", { x: x(range[1]) + 6, y: y + 13 }, format(value)));
  });
  svg.append(el("line", { x1: x(origin), x2: x(origin), y1: 0, y2: rows.length * rowH + 10, stroke: "#999" }));
  return svg;
}

function show(target, fn) {
  target.replaceChildren();
  try {
    fn(target);
  } catch (e) {
    const p = document.createElement("p");
    p.className = "error";
    p.textContent = String(e.message ?? e);
    target.append(p);
  }
}

function para(text) {
  const p = document.createElement("p");
  p.textContent = text;
  return p;
}

function setupGrid() {
  const rows = [[1, 2, 2], [3, 3, ""], [4, 5, 4], ["", 1, 2], [5, 4, 5]];
  const table = $("grid");
  table.replaceChildren();
  rows.forEach((row) => {
    const tr = document.createElement("tr");
    row.forEach((v) => {
      const td = document.createElement("td");
      const input = document.createElement("input");
      input.value = v;
      td.append(input);
      tr.append(td);
    });
    table.append(tr);
  });
}

function readGrid() {
  return [...$("grid").rows].map((tr) =>
    [...tr.querySelectorAll("input")].map((i) => (i.value.trim() === "" ? null : Number(i.value))),
  );
}

async function main() {
  await init();
  setupGrid();
  $("agree-run").onclick = () =>
    show($("agree-out"), (out) => {
      const a = JSON.parse(agreement(JSON.stringify(readGrid())));
      const fmt = (v) => (v === null ? "undefined" : v.toFixed(3));
      out.append(para(`interval α = ${fmt(a.interval)}, ordinal α = ${fmt(a.ordinal)} over ${a.pairable_values} pairable ratings`));
    });

  // Let the status line paint before the blocking training call.
  await new Promise((r) => setTimeout(r, 30));
  const studio = new StudioCore(4);
  $("status").textContent = `Model ${studio.modelVersion()} ready.`;
  $("score-run").disabled = false;
  $("cmp-run").disabled = false;

  $("score-run").onclick = () =>
    show($("score-out"), (out) => {
      const s = JSON.parse(studio.score($("score-text").value));
      const rows = Object.entries(s.profile);
      out.append(barChart(rows, { range: [1, 5], origin: 3, format: (v) => v.toFixed(2) }));
    });

  $("cmp-run").onclick = () =>
    show($("cmp-out"), (out) => {
      const variants = [
        { label: "A", text: $("cmp-a").value },
        { label: "B", text: $("cmp-b").value },
      ];
      const c = JSON.parse(studio.compare(JSON.stringify(variants)));
      const d = c.deltas[0];
      const dims = Object.entries(d.dimensions);
      const span = Math.max(0.25, ...dims.map(([, v]) => Math.abs(v)));
      out.append(para("Perception change, B minus A:"));
      out.append(barChart(dims, { range: [-span, span], origin: 0, format: (v) => (v >= 0 ? "+" : "") + v.toFixed(2) }));
      const eng = Object.entries(d.engagement).map(([k, v]) => [k, 100 * v.percent_change]);
      const pspan = Math.max(5, ...eng.map(([, v]) => Math.abs(v)));
      out.append(para("Expected engagement change:"));
      out.append(barChart(eng, { range: [-pspan, pspan], origin: 0, format: (v) => (v >= 0 ? "+" : "") + v.toFixed(1) + "%" }));
    });
}

main().catch((e) => {
  $("status").textContent = `Failed to start: ${e.message ?? e}`;
  $("status").className = "error";
});
