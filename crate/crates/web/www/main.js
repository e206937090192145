import init, { info_table, sparse_theory, phase_demo } from "./pkg/phaseprobe_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (x) => (typeof x === "number" ? x.toFixed(4) : String(x));

function show(out, f) {
  out.classList.remove("err");
  try {
    out.textContent = f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = e.message ?? String(e);
  }
}

// Cell (f, y, l) lives at index f * 4 + y * 2 + l.
function buildCounts() {
  const defaults = [405, 45, 5, 45, 45, 5, 45, 405];
  let html = "<tr><th>F</th><th>Y</th><th>L = 0</th><th>L = 1</th></tr>";
  for (let f = 0; f < 2; f++)
    for (let y = 0; y < 2; y++) {
      html += `<tr><td>${f}</td><td>${y}</td>`;
      for (let l = 0; l < 2; l++) {
        const i = f * 4 + y * 2 + l;
        html += `<td><input type="number" min="0" id="c${i}" value="${defaults[i]}"></td>`;
      }
      html += "</tr>";
    }
  $("counts").innerHTML = html;
}

function runInfo() {
  show($("info-out"), () => {
    const counts = BigUint64Array.from({ length: 8 }, (_, i) => BigInt(Math.max(0, Math.round(num(`c${i}`)))));
    const r = JSON.parse(info_table(counts));
    const m = r.metrics;
    return [
      `acc(F) = ${fmt(r.acc_f)}   acc(L) = ${fmt(r.acc_l)}`,
      `I(F;Y)   = ${fmt(m.i_fy)} bits`,
      `I(L;Y)   = ${fmt(m.i_ly)} bits`,
      `I(F;Y|L) = ${fmt(m.i_fy_given_l)} bits`,
      `I(L;Y|F) = ${fmt(m.i_ly_given_f)} bits`,
      `μ        = ${fmt(m.mu)} bits   (μ / I(F;Y) = ${fmt(m.mu / m.i_fy)})`,
    ].join("\n");
  });
}

function runTheory() {
  show($("th-out"), () => {
    const r = JSON.parse(sparse_theory(num("th-n"), num("th-d"), num("th-p"), num("th-seeds"), $("th-sgd").checked));
    return [
      `gradient-descent limit: train ${fmt(r.train_acc)}  population ${fmt(r.pop_acc)}  (clean bound 1 − p = ${fmt(1 - r.p)})`,
      `signal-ignoring interpolator: train ${fmt(r.witness_train_acc)}  population ${fmt(r.witness_pop_acc)}`,
      $("th-sgd").checked ? `max SGD distance to closed form: ${r.dist_to_closed_form.toExponential(2)}` : "",
    ].join("\n");
  });
}

function plot(rows, iLy, t0) {
  const W = 820, H = 300, P = 40;
  const xs = rows.map((r) => Math.log10(r.step + 1));
  const xMax = Math.max(...xs), yMax = Math.max(1e-9, ...rows.map((r) => Math.max(r.i_fy, r.mu)), iLy) * 1.05;
  const X = (x) => P + (x / xMax) * (W - 2 * P);
  const Y = (y) => H - P - (y / yMax) * (H - 2 * P);
  const line = (ys, color) =>
    `<polyline fill="none" stroke="${color}" stroke-width="2" points="${ys.map((y, i) => `${X(xs[i])},${Y(y)}`).join(" ")}"/>`;
  const t0x = X(Math.log10(t0 + 1));
  $("ph-plot").innerHTML = `<svg width="${W}" height="${H}" xmlns="http://www.w3.org/2000/svg" font-size="12">
    <line x1="${P}" y1="${H - P}" x2="${W - P}" y2="${H - P}" stroke="#888"/>
    <line x1="${P}" y1="${P}" x2="${P}" y2="${H - P}" stroke="#888"/>
    <line x1="${P}" y1="${Y(iLy)}" x2="${W - P}" y2="${Y(iLy)}" stroke="#999" stroke-dasharray="4 3"/>
    <line x1="${t0x}" y1="${P}" x2="${t0x}" y2="${H - P}" stroke="#c60" stroke-dasharray="2 3"/>
    ${line(rows.map((r) => r.i_fy), "#1f77b4")}
    ${line(rows.map((r) => r.mu), "#d62728")}
    <text x="${W - P}" y="${Y(iLy) - 4}" text-anchor="end">I(L;Y)</text>
    <text x="${t0x + 4}" y="${P + 12}">T0</text>
    <text x="${P + 8}" y="${P + 12}" fill="#1f77b4">I(F;Y)</text>
    <text x="${P + 70}" y="${P + 12}" fill="#d62728">μ(F;L)</text>
    <text x="${W / 2}" y="${H - 8}" text-anchor="middle">log10(step + 1)</text>
    <text x="${P - 4}" y="${Y(yMax / 1.05) + 4}" text-anchor="end">${fmt(yMax / 1.05)}</text>
    <text x="${P - 4}" y="${H - P + 4}" text-anchor="end">0</text>
  </svg>`;
}

function runPhase() {
  show($("ph-out"), () => {
    const r = JSON.parse(phase_demo(num("ph-noise"), num("ph-width"), BigInt(num("ph-steps")), num("ph-lr"), BigInt(num("ph-seed"))));
    const rep = r.report, last = r.series.rows[r.series.rows.length - 1];
    plot(r.series.rows, rep.i_ly, rep.t0);
    return [
      `linear model test accuracy ${fmt(r.simple_test_acc)}; network final train ${fmt(last.train_acc)} test ${fmt(last.test_acc)}`,
      `T0 = ${rep.t0}${rep.t0_reached ? "" : " (not reached)"}`,
      `μ/I(F;Y) at T0: linear model ${fmt(rep.ratio_simple)}, matched null ${fmt(rep.ratio_null)} ± ${fmt(rep.ratio_null_std)}`,
      rep.plateau_ratio == null ? "no checkpoints after T0" : `min μ after T0 / I(L;Y) = ${fmt(rep.plateau_ratio)}`,
    ].join("\n");
  });
}

await init();
buildCounts();
$("info-run").onclick = runInfo;
$("th-run").onclick = runTheory;
$("ph-run").onclick = runPhase;
runInfo();
