import init, { race_json, bound_scan_json, graph_json } from "./pkg/swarmsgd_demo.js";

const SWARM = "#1f77b4";
const CENTRAL = "#d62728";
const PAD = { left: 60, right: 20, top: 15, bottom: 35 };

const num = (id) => Number(document.getElementById(id).value);

function call(fn, ...args) {
  const result = JSON.parse(fn(...args));
  if (result.error) throw new Error(result.error);
  return result;
}

// Line plot with optional log axes. `series` is a list of {points, color}.
function plot(canvas, series, { logX = false, logY = true, xLabel = "", yLabel = "", hline = null } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const fx = logX ? Math.log10 : (v) => v;
  const fy = logY ? Math.log10 : (v) => v;
  const valid = (p) => Number.isFinite(fx(p[0])) && Number.isFinite(fy(p[1]));
  const all = series.flatMap((s) => s.points.filter(valid));
  if (all.length === 0) return;
  const xs = all.map((p) => fx(p[0]));
  const ys = all.map((p) => fy(p[1]));
  if (hline !== null) ys.push(fy(hline));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (v) => PAD.left + ((fx(v) - x0) / (x1 - x0 || 1)) * (w - PAD.left - PAD.right);
  const sy = (v) => h - PAD.bottom - ((fy(v) - y0) / (y1 - y0 || 1)) * (h - PAD.top - PAD.bottom);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(PAD.left, PAD.top, w - PAD.left - PAD.right, h - PAD.top - PAD.bottom);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  const fmt = (v, log) => (log ? `1e${v.toFixed(1)}` : v.toPrecision(3));
  ctx.fillText(fmt(x0, logX), PAD.left, h - PAD.bottom + 15);
  ctx.fillText(fmt(x1, logX), w - PAD.right - 40, h - PAD.bottom + 15);
  ctx.fillText(fmt(y1, logY), 5, PAD.top + 10);
  ctx.fillText(fmt(y0, logY), 5, h - PAD.bottom);
  ctx.fillText(xLabel, w / 2 - 20, h - 5);
  ctx.fillText(yLabel, 5, h / 2);

  if (hline !== null) {
    ctx.setLineDash([4, 4]);
    ctx.strokeStyle = "#888";
    ctx.beginPath();
    ctx.moveTo(PAD.left, sy(hline));
    ctx.lineTo(w - PAD.right, sy(hline));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let pen = false;
    for (const p of s.points) {
      if (!valid(p)) {
        pen = false;
        continue;
      }
      pen ? ctx.lineTo(sx(p[0]), sy(p[1])) : ctx.moveTo(sx(p[0]), sy(p[1]));
      pen = true;
    }
    ctx.stroke();
  }
}

function runRace() {
  const out = document.getElementById("r-out");
  try {
    const r = call(race_json, num("r-n"), num("r-d"), num("r-gamma"), num("r-a"), num("r-p"), num("r-seed"));
    plot(document.getElementById("r-plot"), [
      { points: r.swarm, color: SWARM },
      { points: r.central, color: CENTRAL },
    ], { xLabel: "virtual time", yLabel: "|x̄ − x*|²", hline: r.threshold });
    const t = (v) => (v === null ? "not reached" : v.toFixed(3));
    const ratio = r.t_swarm && r.t_central ? (r.t_central / r.t_swarm).toFixed(2) : "–";
    out.innerHTML =
      `<span class="swarm">swarm</span> reaches ${r.threshold} at t = ${t(r.t_swarm)}\n` +
      `<span class="central">batch</span> reaches ${r.threshold} at t = ${t(r.t_central)}\n` +
      `ratio ${ratio}   (H_N = ${r.h_n.toFixed(3)}, λ₂ = ${r.lambda2.toFixed(3)})`;
  } catch (e) {
    out.textContent = e.message;
  }
}

function runScan() {
  const out = document.getElementById("b-out");
  try {
    const scan = call(bound_scan_json, num("b-n"), num("b-a"), num("b-l2"), num("b-d"), num("b-s2"), num("b-rho"));
    const pts = (key) => scan.map((p) => [p.gamma, p[key] ?? NaN]);
    plot(document.getElementById("b-plot"), [
      { points: pts("phi_star"), color: SWARM },
      { points: pts("phi_star_star"), color: CENTRAL },
    ], { logX: true, xLabel: "step size γ", yLabel: "error floor" });
    const admissible = scan.filter((p) => p.phi_star !== null);
    const largest = admissible.length ? admissible[admissible.length - 1].gamma.toExponential(2) : "none";
    out.innerHTML =
      `<span class="swarm">swarm floor φ*</span> and <span class="central">batch floor φ**</span>; ` +
      `largest admissible γ on the grid: ${largest}`;
  } catch (e) {
    out.textContent = e.message;
  }
}

function runGraph() {
  const out = document.getElementById("g-out");
  const canvas = document.getElementById("g-plot");
  const ctx = canvas.getContext("2d");
  try {
    const g = call(graph_json, num("g-n"), num("g-p"), num("g-seed"));
    const { width: w, height: h } = canvas;
    const radius = Math.min(w, h) / 2 - 20;
    const pos = Array.from({ length: g.n }, (_, i) => {
      const phi = (2 * Math.PI * i) / g.n;
      return [w / 2 + radius * Math.cos(phi), h / 2 + radius * Math.sin(phi)];
    });
    ctx.clearRect(0, 0, w, h);
    ctx.strokeStyle = "#aaa";
    for (const [i, j] of g.edges) {
      ctx.beginPath();
      ctx.moveTo(...pos[i]);
      ctx.lineTo(...pos[j]);
      ctx.stroke();
    }
    ctx.fillStyle = SWARM;
    for (const [x, y] of pos) {
      ctx.beginPath();
      ctx.arc(x, y, 4, 0, 2 * Math.PI);
      ctx.fill();
    }
    out.textContent =
      `${g.edges.length} edges, λ₂ = ${g.lambda2.toFixed(4)}, max degree ${g.max_degree}, ` +
      `connected after ${g.attempts} draw(s)`;
  } catch (e) {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    out.textContent = e.message;
  }
}

await init();
document.getElementById("r-run").addEventListener("click", runRace);
document.getElementById("b-run").addEventListener("click", runScan);
document.getElementById("g-run").addEventListener("click", runGraph);
runRace();
runScan();
runGraph();
