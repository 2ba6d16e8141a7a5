import init, { coverageRace, nashMassCurve, hierarchy } from "./pkg/stochlearn_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guard(fn) {
  return () => {
    $("error").textContent = "";
    try {
      fn();
    } catch (e) {
      $("error").textContent = String(e);
    }
  };
}

function drawMap(canvas, side, covered, xy) {
  const ctx = canvas.getContext("2d");
  const cell = canvas.width / side;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let c = 0; c < covered.length; c++) {
    const x = c % side, y = Math.floor(c / side);
    ctx.fillStyle = covered[c] ? "#9ecae1" : "#f0f0f0";
    ctx.fillRect(x * cell, canvas.height - (y + 1) * cell, cell, cell);
  }
  ctx.fillStyle = "#222";
  for (let i = 0; i < xy.length; i += 2) {
    ctx.beginPath();
    ctx.arc((xy[i] + 0.5) * cell, canvas.height - (xy[i + 1] + 0.5) * cell, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function drawLines(canvas, series, xs) {
  const ctx = canvas.getContext("2d");
  const pad = 30;
  const all = series.flatMap((s) => Array.from(s.ys));
  const lo = Math.min(...all), hi = Math.max(...all);
  const x0 = xs ? Math.min(...xs) : 0, x1 = xs ? Math.max(...xs) : series[0].ys.length - 1;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - ((y - lo) / (hi - lo || 1)) * (canvas.height - 2 * pad);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.fillText(hi.toPrecision(3), 2, pad);
  ctx.fillText(lo.toPrecision(3), 2, canvas.height - pad);
  for (const { ys, color } of series) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    ys.forEach((y, k) => {
      const x = sx(xs ? xs[k] : k);
      k === 0 ? ctx.moveTo(x, sy(y)) : ctx.lineTo(x, sy(y));
    });
    ctx.stroke();
  }
}

function race() {
  const view = coverageRace(num("d"), num("n"), num("r"), num("alpha"), num("t"), num("steps"), num("seed"));
  const xy = view.sensor_xy();
  drawMap($("map-lll"), view.side(), view.covered("lll"), xy);
  drawMap($("map-ml"), view.side(), view.covered("ml"), xy);
  drawLines($("curves"), [
    { ys: view.potentials("lll"), color: "#1f77b4" },
    { ys: view.potentials("ml"), color: "#d62728" },
  ]);
  view.free();
}

function gibbsPlot() {
  const temps = Array.from({ length: 60 }, (_, k) => 0.05 * Math.pow(1.08, k));
  const mass = nashMassCurve($("gibbs-game").value, new Float64Array(temps));
  drawLines($("gibbs-plot"), [{ ys: mass, color: "#2ca02c" }], temps.map(Math.log10));
}

function decompose() {
  $("cda-out").textContent = hierarchy($("cda-game").value, $("cda-kernel").value, num("cda-t"));
}

await init();
$("race").onclick = guard(race);
$("gibbs").onclick = guard(gibbsPlot);
$("cda").onclick = guard(decompose);
guard(race)();
guard(gibbsPlot)();
guard(decompose)();
