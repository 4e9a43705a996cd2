import init, { decay_curves, pointer_readout, energy_distribution } from "./pkg/pointer_basis_demo.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const numbers = (s) => s.split(",").map((x) => x.trim()).filter((x) => x !== "").map(Number);
const field = (sec, name) => sec.querySelector(`[name=${name}]`).value;

// series: [{x, y, color, dash, label}]
function plot(canvas, series, xLabel) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const y1 = Math.max(...ys) || 1;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - (y / y1) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 14);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(xLabel, w / 2, h - 8);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash ? [6, 4] : []);
    ctx.beginPath();
    s.x.forEach((x, k) => (k ? ctx.lineTo(sx(x), sy(s.y[k])) : ctx.moveTo(sx(x), sy(s.y[k]))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function legend(el, series) {
  el.innerHTML = series
    .map((s) => `<span style="color:${s.color}">${s.dash ? "- -" : "──"} ${s.label}</span>`)
    .join("");
}

function table(el, head, rows) {
  el.innerHTML =
    "<tr>" + head.map((c) => `<th>${c}</th>`).join("") + "</tr>" +
    rows.map((r) => "<tr>" + r.map((c) => `<td>${c}</td>`).join("") + "</tr>").join("");
}

function guarded(sec, run) {
  const err = sec.querySelector(".error");
  sec.querySelector("button").onclick = () => {
    err.textContent = "";
    try {
      run();
    } catch (e) {
      err.textContent = String(e);
    }
  };
  sec.querySelector("button").onclick();
}

function decay() {
  const sec = document.getElementById("decay");
  guarded(sec, () => {
    const levels = new Float64Array(numbers(field(sec, "levels")));
    const r = JSON.parse(decay_curves(levels, Number(field(sec, "v")), Number(field(sec, "tmax")), 200));
    table(
      sec.querySelector("table"),
      ["Ω", "Γ", "δ", "Ω − δ"],
      r.levels.map((l) => [l.omega, l.gamma.toExponential(4), l.delta.toExponential(4), l.dressed.toFixed(5)]),
    );
    const series = [];
    r.populations.forEach((p, i) => series.push({ x: r.t, y: p, color: COLORS[i % 6], label: `ρ${i}${i}` }));
    r.coherences.forEach((c, j) =>
      series.push({ x: r.t, y: c, color: COLORS[(j + 1) % 6], dash: true, label: `|ρ0${j + 1}|` }),
    );
    plot(sec.querySelector("canvas"), series, "t");
    legend(sec.querySelector(".legend"), series);
  });
}

function readout() {
  const sec = document.getElementById("readout");
  guarded(sec, () => {
    const levels = new Float64Array(numbers(field(sec, "levels")));
    const re = new Float64Array(numbers(field(sec, "re")));
    const im = new Float64Array(numbers(field(sec, "im")));
    const r = JSON.parse(pointer_readout(levels, Number(field(sec, "v")), re, im, 200));
    table(
      sec.querySelector("table"),
      ["pointer at", "probability"],
      r.energies.map((e, i) => [e, r.probabilities[i].toFixed(6)]),
    );
    const series = [];
    r.pointers.forEach((p, i) => series.push({ x: r.t, y: p, color: COLORS[i % 6], label: `pointer ${i}` }));
    r.populations.forEach((p, i) =>
      series.push({ x: r.t, y: p, color: COLORS[i % 6], dash: true, label: `ρ${i}${i}` }),
    );
    plot(sec.querySelector("canvas"), series, "t");
    legend(sec.querySelector(".legend"), series);
  });
}

function oracle() {
  const sec = document.getElementById("oracle");
  guarded(sec, () => {
    const r = JSON.parse(
      energy_distribution(
        Number(field(sec, "level")),
        Number(field(sec, "v")),
        Number(field(sec, "m")),
        Number(field(sec, "t")),
      ),
    );
    sec.querySelector(".info").textContent =
      `Γ = ${r.gamma.toExponential(4)}, Ω − δ = ${r.dressed.toFixed(5)}, ` +
      `remaining in the level ${r.discrete.toFixed(4)}, recurrence time ${r.recurrence_time.toFixed(1)}` +
      (r.within_window ? "" : " (t is past half the recurrence time; the curve is not trustworthy)");
    // zoom on ±12 Γ around the line
    const keep = r.nodes.map((w) => Math.abs(w - r.dressed) < 12 * r.gamma);
    const pick = (a) => a.filter((_, k) => keep[k]);
    const x = pick(r.nodes);
    const series = [
      { x, y: pick(r.density), color: COLORS[0], label: "exact diagonalization" },
      { x, y: pick(r.predicted), color: COLORS[1], dash: true, label: "decaying-level line shape" },
    ];
    plot(sec.querySelector("canvas"), series, "ω");
    legend(sec.querySelector(".legend"), series);
  });
}

await init();
decay();
readout();
oracle();
