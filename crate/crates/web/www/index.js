import init, { coefficient_curves, post_selection, wei_norman } from "./pkg/noonsim_web.js";

const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

function numbers(form) {
  const out = {};
  for (const el of form.elements) {
    if (el.name) out[el.name] = Number(el.value);
  }
  return out;
}

function extent(values) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (hi - lo < 1e-12) return [lo - 1, hi + 1];
  return [lo, hi];
}

// series: [{name, ys}], marks: x positions drawn as dashed verticals
function draw(section, xs, series, marks = []) {
  const canvas = section.querySelector("canvas");
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 50, B = 25, T = 10, R = 10;
  ctx.clearRect(0, 0, W, H);
  const [x0, x1] = extent(xs);
  const [y0, y1] = extent(series.flatMap(s => s.ys));
  const px = x => L + (x - x0) / (x1 - x0) * (W - L - R);
  const py = y => H - B - (y - y0) / (y1 - y0) * (H - B - T);

  ctx.strokeStyle = "#000";
  ctx.fillStyle = "#000";
  ctx.font = "11px sans-serif";
  ctx.beginPath();
  ctx.moveTo(L, T); ctx.lineTo(L, H - B); ctx.lineTo(W - R, H - B);
  ctx.stroke();
  for (let k = 0; k <= 5; k++) {
    const xv = x0 + (x1 - x0) * k / 5, yv = y0 + (y1 - y0) * k / 5;
    ctx.fillText(xv.toPrecision(3), px(xv) - 10, H - 8);
    ctx.fillText(yv.toPrecision(3), 2, py(yv) + 4);
  }

  ctx.setLineDash([4, 4]);
  ctx.strokeStyle = "#999";
  for (const m of marks) {
    ctx.beginPath(); ctx.moveTo(px(m), T); ctx.lineTo(px(m), H - B); ctx.stroke();
  }
  ctx.setLineDash([]);

  const legend = section.querySelector(".legend");
  legend.innerHTML = "";
  series.forEach((s, k) => {
    const color = COLORS[k % COLORS.length];
    ctx.strokeStyle = color;
    ctx.beginPath();
    s.ys.forEach((y, i) => (i ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y))));
    ctx.stroke();
    const tag = document.createElement("span");
    tag.style.color = color;
    tag.textContent = "■ " + s.name;
    legend.appendChild(tag);
  });
}

function wire(id, run) {
  const section = document.getElementById(id);
  const form = section.querySelector("form");
  const err = section.querySelector(".err");
  const go = () => {
    err.textContent = "";
    try {
      run(section, numbers(form));
    } catch (e) {
      err.textContent = String(e.message ?? e);
    }
  };
  form.addEventListener("submit", ev => { ev.preventDefault(); go(); });
  go();
}

await init();

wire("curves", (section, p) => {
  const data = JSON.parse(coefficient_curves(p.omega0, p.omega, p.lambda, p.g, p.t_max, p.t_step));
  draw(section, data.t, data.labels.map((name, k) => ({ name: `|C${name}|`, ys: data.values[k] })));
});

wire("post", (section, p) => {
  const data = JSON.parse(post_selection(p.omega0, p.omega, p.lambda, p.g, p.mode, p.count, p.t_max, p.t_step));
  draw(section, data.t, [
    { name: "outcome probability", ys: data.probability },
    { name: "NOON fidelity", ys: data.fidelity },
  ], data.events.map(e => e.t));
  const list = section.querySelector(".events");
  list.innerHTML = "";
  for (const e of data.events) {
    const li = document.createElement("li");
    li.textContent = `t = ${e.t.toFixed(4)}, probability ${e.probability.toFixed(6)}, fidelity ${e.fidelity.toFixed(9)}`;
    list.appendChild(li);
  }
  if (!data.events.length) list.innerHTML = "<li>no NOON events in range</li>";
});

wire("wn", (section, p) => {
  const data = JSON.parse(wei_norman(p.omega2, p.g, p.t_end, p.step));
  draw(section, data.t, [
    { name: "Re f1", ys: data.f1_re },
    { name: "Im f1", ys: data.f1_im },
    { name: "log10 error", ys: data.error.map(e => Math.log10(Math.max(e, 1e-17))) },
  ]);
  const worst = Math.max(...data.error);
  section.querySelector(".note").textContent =
    `max |f - closed form| = ${worst.toExponential(2)}` + (data.stopped ? `; stopped: ${data.stopped}` : "");
});
