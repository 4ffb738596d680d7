import init, { compute, sweep, propagation } from "./pkg/respval_demo.js";

const DEFAULT_INSTANCE = {
  players: ["1", "2", "3", "4"],
  matrix: [
    [0.1, 0.0, 0.1, 0.8],
    [0.2, 0.0, 0.2, 0.6],
    [0.1, 0.0, 0.1, 0.8],
    [0.5, 0.0, 0.5, 0.0],
  ],
  impacts: { "1": 1, "2": 2, "3": 3, "4": 4 },
};

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

const $ = (id) => document.getElementById(id);

function parseCsv(text) {
  return text.trim().split("\n").map((line) => line.split(","));
}

function fmt(x) {
  return Number(x).toFixed(6);
}

function fillTable(table, header, rows) {
  table.replaceChildren();
  const head = table.insertRow();
  for (const h of header) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  for (const r of rows) {
    const tr = table.insertRow();
    for (const cell of r) tr.insertCell().textContent = cell;
  }
}

function showError(err) {
  $("error").textContent = err ? String(err) : "";
}

function renderValues() {
  const gamma = Number($("gamma").value);
  $("gamma-label").textContent = gamma.toFixed(2);
  const out = JSON.parse(compute($("instance").value, gamma, Number($("epsilon").value)));
  const { exact, series } = out;
  $("summary").textContent =
    `series depth q = ${series.q}, certified error ${series.certified_error.toExponential(2)}; ` +
    `sum of totals ${fmt(exact.sum_total)} (impact total ${fmt(exact.impact_total)})`;
  fillTable(
    $("values"),
    ["player", "direct", "indirect", "total (exact)", "total (series)"],
    exact.players.map((p, i) => [p.id, fmt(p.direct), fmt(p.indirect), fmt(p.total), fmt(series.players[i].total)]),
  );
}

function renderSweep() {
  const rows = parseCsv(sweep($("instance").value, Number($("steps").value)));
  const players = rows[0].slice(1);
  const data = rows.slice(1).map((r) => r.map(Number));
  const canvas = $("plot");
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);

  let lo = Infinity, hi = -Infinity;
  for (const r of data) for (const v of r.slice(1)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (hi === lo) { hi += 1; lo -= 1; }
  const x = (g) => pad + g * (w - 2 * pad);
  const y = (v) => h - pad - ((v - lo) / (hi - lo)) * (h - 2 * pad);

  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad); ctx.lineTo(pad, h - pad); ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#333";
  ctx.font = "12px sans-serif";
  ctx.fillText("0", pad - 4, h - pad + 14);
  ctx.fillText("1", w - pad - 4, h - pad + 14);
  ctx.fillText("γ", w / 2, h - pad + 28);
  ctx.fillText(hi.toFixed(3), 2, pad);
  ctx.fillText(lo.toFixed(3), 2, h - pad);

  const cur = Number($("gamma").value);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath(); ctx.moveTo(x(cur), pad); ctx.lineTo(x(cur), h - pad); ctx.stroke();

  players.forEach((id, j) => {
    const color = COLORS[j % COLORS.length];
    ctx.strokeStyle = color;
    ctx.beginPath();
    data.forEach((r, k) => (k === 0 ? ctx.moveTo(x(r[0]), y(r[j + 1])) : ctx.lineTo(x(r[0]), y(r[j + 1]))));
    ctx.stroke();
    ctx.fillStyle = color;
    ctx.fillText(id, w - pad + 4, y(data[data.length - 1][j + 1]));
  });
}

function renderMatrix() {
  const rows = parseCsv(propagation($("instance").value, Number($("gamma").value), Number($("depth").value)));
  fillTable($("matrix"), rows[0], rows.slice(1).map((r) => [r[0], ...r.slice(1).map(fmt)]));
}

function refresh() {
  try {
    renderValues();
    renderSweep();
    renderMatrix();
    showError(null);
  } catch (err) {
    showError(err);
  }
}

await init();
$("instance").value = JSON.stringify(DEFAULT_INSTANCE, null, 2);
for (const id of ["instance", "gamma", "epsilon", "steps", "depth"]) $(id).addEventListener("input", refresh);
refresh();
