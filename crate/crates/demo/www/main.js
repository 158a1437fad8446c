import init, { rotation_series, decompose_system, maximal_mc } from "./pkg/ergodic_demo.js";

const $ = (id) => document.getElementById(id);

function guard(target, action) {
  try {
    action();
    target.classList.remove("error");
  } catch (err) {
    target.textContent = String(err);
    target.classList.add("error");
  }
}

function plotRotation() {
  const status = $("rot-status");
  guard(status, () => {
    const alpha = Number($("rot-alpha").value);
    const series = JSON.parse(rotation_series(alpha, Number($("rot-x0").value), Number($("rot-k").value), 200));
    const canvas = $("rot-canvas");
    const ctx = canvas.getContext("2d");
    const { width, height } = canvas;
    ctx.clearRect(0, 0, width, height);

    const pts = series.points;
    const floor = 1e-12;
    const ys = pts.flatMap((p) => [Math.max(Math.abs(p.average), floor), p.bound]);
    const [yMin, yMax] = [Math.log10(Math.min(...ys)), Math.log10(Math.max(...ys))];
    const xMax = Math.log10(pts[pts.length - 1].k) || 1;
    const px = (k) => 40 + (Math.log10(k) / xMax) * (width - 60);
    const py = (v) => height - 20 - ((Math.log10(Math.max(v, floor)) - yMin) / (yMax - yMin || 1)) * (height - 40);

    const line = (value, colour) => {
      ctx.strokeStyle = colour;
      ctx.beginPath();
      pts.forEach((p, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, px(p.k), py(value(p))));
      ctx.stroke();
    };
    line((p) => p.bound, "#999");
    line((p) => Math.abs(p.average), "#1f5fbf");

    const last = pts[pts.length - 1];
    status.textContent = `k = ${last.k}: A_k = ${last.average.toExponential(3)}, envelope ${last.bound.toExponential(3)}`;
  });
}

function drawSegments(dec) {
  const canvas = $("dec-canvas");
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const scale = (width - 20) / dec.m;
  for (const seg of dec.segments) {
    ctx.fillStyle = seg.kind === "positive_block" ? "#3a9d5d" : "#d9d9d9";
    ctx.fillRect(10 + seg.start * scale, 30, Math.max(seg.length * scale - 1, 1), 50);
  }
  if (dec.tail_start < dec.m) {
    ctx.fillStyle = "#e0a030";
    ctx.fillRect(10 + dec.tail_start * scale, 30, (dec.m - dec.tail_start) * scale, 50);
  }
  ctx.fillStyle = "#222";
  ctx.fillText("green: positive blocks, grey: zero runs, orange: tail", 10, 20);
}

function runDecomposition() {
  const out = $("dec-output");
  guard(out, () => {
    const json = decompose_system(
      $("dec-system").value,
      Number($("dec-x").value),
      Number($("dec-n").value),
      Number($("dec-m").value),
      $("dec-lambda").value,
    );
    const dec = JSON.parse(json);
    drawSegments(dec);
    out.textContent = JSON.stringify(dec, null, 2);
  });
}

function runMonteCarlo() {
  const out = $("mc-output");
  guard(out, () => {
    const report = maximal_mc(
      Number($("mc-alpha").value),
      Number($("mc-lambda").value),
      Number($("mc-n").value),
      Number($("mc-samples").value),
      BigInt($("mc-seed").value),
    );
    out.textContent = JSON.stringify(JSON.parse(report), null, 2);
  });
}

await init();
$("rot-run").addEventListener("click", plotRotation);
$("dec-run").addEventListener("click", runDecomposition);
$("mc-run").addEventListener("click", runMonteCarlo);
plotRotation();
runDecomposition();
