import init, { tanh_trajectories, phi_curves, fdm_norms, scheme_names } from "./pkg/riccati_wasm.js";

const COLORS = ["#222", "#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

function rows(flat, width) {
  const out = [];
  for (let i = 0; i < flat.length; i += width) out.push(Array.from(flat.slice(i, i + width)));
  return out;
}

// series: [{ label, xs, ys, dashed }]
function plot(id, series, logY = false) {
  const canvas = document.getElementById(`${id}-canvas`);
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 48;
  ctx.clearRect(0, 0, w, h);

  const tf = logY ? (v) => Math.log10(Math.max(v, 1e-300)) : (v) => v;
  const xs = series.flatMap((s) => s.xs);
  const ys = series.flatMap((s) => s.ys.map(tf)).filter(Number.isFinite);
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  if (x0 === x1) { x1 = x0 + 1; }
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((tf(y) - y0) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 16);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 16);
  const fmtY = (v) => (logY ? `1e${v.toFixed(1)}` : v.toPrecision(3));
  ctx.fillText(fmtY(y1), 4, pad + 4);
  ctx.fillText(fmtY(y0), 4, h - pad);

  const legend = document.getElementById(`${id}-legend`);
  legend.innerHTML = "";
  series.forEach((s, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.setLineDash(s.dashed ? [6, 4] : []);
    ctx.beginPath();
    s.xs.forEach((x, j) => (j ? ctx.lineTo(px(x), py(s.ys[j])) : ctx.moveTo(px(x), py(s.ys[j]))));
    ctx.stroke();
    const tag = document.createElement("span");
    tag.style.color = COLORS[i % COLORS.length];
    tag.textContent = s.label;
    legend.appendChild(tag);
  });
  ctx.setLineDash([]);
}

function guarded(id, fn) {
  return () => {
    const err = document.getElementById(`${id}-err`);
    err.textContent = "";
    try {
      fn();
    } catch (e) {
      err.textContent = String(e.message ?? e);
    }
  };
}

const num = (id) => Number(document.getElementById(id).value);

const runTanh = guarded("tanh", () => {
  const r = rows(tanh_trajectories(num("tanh-h"), num("tanh-t")), 4);
  const t = r.map((v) => v[0]);
  plot("tanh", [
    { label: "tanh t", xs: t, ys: r.map((v) => v[1]) },
    { label: "ExpEuler", xs: t, ys: r.map((v) => v[2]), dashed: true },
    { label: "Erow3", xs: t, ys: r.map((v) => v[3]), dashed: true },
  ]);
});

const runPhi = guarded("phi", () => {
  const r = rows(phi_curves(num("phi-a"), num("phi-b"), 400), 5);
  const z = r.map((v) => v[0]);
  plot("phi", [0, 1, 2, 3].map((j) => ({ label: `φ${j}`, xs: z, ys: r.map((v) => v[j + 1]) })), true);
});

const runFdm = guarded("fdm", () => {
  const scheme = document.getElementById("fdm-scheme").value;
  const started = performance.now();
  const r = rows(fdm_norms(num("fdm-k"), num("fdm-h"), scheme, num("fdm-seed")), 4);
  const ms = performance.now() - started;
  const t = r.map((v) => v[0]);
  plot("fdm", [
    { label: "reference", xs: t, ys: r.map((v) => v[2]) },
    { label: scheme, xs: t, ys: r.map((v) => v[1]), dashed: true },
  ]);
  const k = num("fdm-k");
  const last = r[r.length - 1];
  document.getElementById("fdm-info").textContent =
    `n = ${k * k}, relative error at t = 1: ${last[3].toExponential(2)}, ` +
    `max over the run: ${Math.max(...r.map((v) => v[3])).toExponential(2)}, ${ms.toFixed(0)} ms`;
});

await init();
const select = document.getElementById("fdm-scheme");
for (const name of scheme_names()) {
  const opt = document.createElement("option");
  opt.textContent = name;
  if (name === "Erow3") opt.selected = true;
  select.appendChild(opt);
}
document.getElementById("tanh-run").onclick = runTanh;
document.getElementById("phi-run").onclick = runPhi;
document.getElementById("fdm-run").onclick = runFdm;
runTanh();
runPhi();
runFdm();
