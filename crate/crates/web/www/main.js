import init, { hover, allocate, yawDecay } from "./pkg/flapsim_web.js";

const $ = (id) => document.getElementById(id);

function plot(canvas, x, series, yLabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  let lo = Infinity, hi = -Infinity;
  for (const s of series) for (const v of s.y) { if (v < lo) lo = v; if (v > hi) hi = v; }
  if (!(hi > lo)) { hi = lo + 1; }
  const x0 = x[0], x1 = x[x.length - 1];
  const px = (v) => pad + (v - x0) / (x1 - x0) * (w - pad - 10);
  const py = (v) => h - pad / 2 - (v - lo) / (hi - lo) * (h - pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad / 2, w - pad - 10, h - pad);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText(hi.toPrecision(3), 2, pad / 2 + 8);
  ctx.fillText(lo.toPrecision(3), 2, h - pad / 2);
  ctx.fillText(yLabel, pad + 4, pad / 2 + 12);
  ctx.fillText(`${x1.toFixed(1)} s`, w - 40, h - 4);
  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.y.forEach((v, i) => (i ? ctx.lineTo(px(x[i]), py(v)) : ctx.moveTo(px(x[i]), py(v))));
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.name, w - 160 + 70 * k, pad / 2 + 12);
  });
}

function runHover() {
  const vib = +$("vib").value, alt = +$("alt").value, seed = +$("seed").value;
  $("vib-val").textContent = `${(vib * 1e6).toFixed(0)} µN·m`;
  $("alt-val").textContent = `${alt.toFixed(2)} m`;
  try {
    const r = hover(vib, alt, seed);
    const t = r.time;
    plot($("hover-alt"), t, [
      { y: r.altitude, color: "#2c6fbb", name: "z" },
      { y: t.map(() => alt), color: "#aaa", name: "setpoint" },
    ], "altitude, m");
    plot($("hover-att"), t, [
      { y: r.roll, color: "#c0392b", name: "roll" },
      { y: r.pitch, color: "#27ae60", name: "pitch" },
    ], "attitude, deg");
    $("hover-out").textContent =
      `max |roll|, |pitch|  ${r.maxTilt.toFixed(2)} deg\n` +
      `reach time           ${Number.isNaN(r.reachTime) ? "never" : r.reachTime.toFixed(3) + " s"}\n` +
      `saturated ticks      ${r.saturatedTicks}\n` +
      `diverged             ${r.diverged}`;
    r.free();
  } catch (e) {
    $("hover-out").textContent = `error: ${e.message ?? e}`;
  }
}

function runAlloc() {
  const f = +$("f").value, tx = +$("tx").value, ty = +$("ty").value, tz = +$("tz").value;
  $("f-val").textContent = `${f.toFixed(2)} mN`;
  $("tx-val").textContent = `${tx} nN·m`;
  $("ty-val").textContent = `${ty} nN·m`;
  $("tz-val").textContent = `${tz} nN·m`;
  const a = allocate(f, tx, ty, tz);
  const v = a.commands, sat = a.saturated, got = a.achieved;
  $("wings").innerHTML = "";
  v.forEach((x, i) => {
    const d = document.createElement("div");
    d.className = "wing" + (sat[i] ? " sat" : "");
    d.innerHTML = `<span>wing ${i + 1}: ${x.toFixed(1)} V</span><div style="height:${(x / 260) * 100}%"></div>`;
    $("wings").appendChild(d);
  });
  $("alloc-out").textContent =
    `achieved thrust  ${got[0].toFixed(3)} mN\n` +
    `achieved torque  ${got.slice(1).map((x) => x.toFixed(0)).join(", ")} nN·m`;
  a.free();
}

function runYaw() {
  const w0 = +$("w0").value;
  $("w0-val").textContent = `${w0} rad/s`;
  const d = yawDecay(w0, 1.0);
  plot($("yaw-plot"), d.time, [
    { y: d.fourWing, color: "#2c6fbb", name: "4 wings" },
    { y: d.twoWing, color: "#e67e22", name: "2 wings" },
  ], "yaw rate, rad/s");
  $("yaw-out").textContent = `time-constant ratio (4 / 2 wings)  ${d.ratio.toFixed(4)}`;
  d.free();
}

await init();
for (const id of ["vib", "alt", "seed"]) $(id).addEventListener("change", runHover);
for (const id of ["f", "tx", "ty", "tz"]) $(id).addEventListener("input", runAlloc);
$("w0").addEventListener("change", runYaw);
runHover();
runAlloc();
runYaw();
