import init, { bifurcation, spectrum, entanglement } from "./pkg/opo_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.points).filter(([x, y]) => isFinite(x) && isFinite(y));
  if (!pts.length) return;
  let [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...pts.map((p) => p[1])), Math.max(...pts.map((p) => p[1]))];
  if (opts.yMin !== undefined) y0 = Math.min(y0, opts.yMin);
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) y1 = y0 + 1;
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 14);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.6;
    ctx.beginPath();
    let pen = false;
    for (const [x, y] of s.points) {
      if (!isFinite(x) || !isFinite(y) || (s.breakAt && s.breakAt(x, y))) {
        pen = false;
        continue;
      }
      pen ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y));
      pen = true;
    }
    ctx.stroke();
  }
  for (const m of opts.markers || []) {
    ctx.fillStyle = "#000";
    ctx.beginPath();
    ctx.arc(sx(m.x), sy(m.y), 3, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(m.label, sx(m.x) + 5, sy(m.y) - 5);
  }
}

function guarded(errId, f) {
  try {
    $(errId).textContent = "";
    f();
  } catch (e) {
    $(errId).textContent = String(e);
  }
}

function drawBranch() {
  guarded("branch-err", () => {
    const v = JSON.parse(bifurcation(num("sigma"), num("delta"), num("imax"), 800));
    // split into stable and unstable runs so the colours do not bleed
    const runs = [];
    for (const s of v.samples) {
      const last = runs[runs.length - 1];
      if (!last || last.stable !== s.stable) {
        runs.push({ stable: s.stable, points: last ? [last.points[last.points.length - 1]] : [] });
      }
      runs[runs.length - 1].points.push([s.injection, s.intensity]);
    }
    const series = runs.map((r) => ({ color: r.stable ? "#1565c0" : "#c62828", points: r.points }));
    const markers = [];
    const sp = v.special;
    const inj = (i) => v.samples.reduce((a, s) => (Math.abs(s.intensity - i) < Math.abs(a.intensity - i) ? s : a)).injection;
    if (sp.hopf) markers.push({ x: inj(sp.hopf[0]), y: sp.hopf[0], label: "HB" });
    if (sp.pitchfork <= num("imax")) markers.push({ x: inj(sp.pitchfork), y: sp.pitchfork, label: "PB" });
    plot($("branch"), series, { markers });
  });
}

function drawSpectrum() {
  guarded("spectrum-err", () => {
    const v = JSON.parse(
      spectrum(num("sigma"), num("delta"), num("intensity"), $("mode").value, $("quad").value, num("wmax"), 400),
    );
    const points = v.omega.map((w, k) => [w, v.value[k] === null ? NaN : v.value[k]]);
    plot($("spectrum"), [{ color: "#1565c0", points }, { color: "#aaa", points: [[0, 1], [num("wmax"), 1]] }], { yMin: 0 });
  });
}

function drawEntanglement() {
  guarded("entanglement-err", () => {
    const v = JSON.parse(entanglement(num("delta"), 60));
    plot($("entanglement"), [
      { color: "#1565c0", points: v.map((s) => [s.sigma, s.log_negativity]) },
      { color: "#ef6c00", points: v.map((s) => [s.sigma, s.duan_sum]) },
    ], { yMin: 0 });
  });
}

function redraw() {
  drawBranch();
  drawSpectrum();
  drawEntanglement();
}

await init();
for (const id of ["sigma", "delta", "imax", "intensity", "mode", "quad", "wmax"]) {
  $(id).addEventListener("input", redraw);
}
redraw();
