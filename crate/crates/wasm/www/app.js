import init, { Playground } from "./pkg/coldrec_wasm.js";

const LAMBDAS = Array.from({ length: 15 }, (_, i) => 2 ** (i - 2));
const TOP = 10;
const $ = (id) => document.getElementById(id);
let playground = null;

function setStatus(text, isError = false) {
  $("status").textContent = text;
  $("status").className = isError ? "error" : "";
}

function drawSweep(values, baseline) {
  const canvas = $("sweep");
  const ctx = canvas.getContext("2d");
  const pad = 40;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const lo = Math.min(baseline, ...values) - 0.02;
  const hi = Math.max(baseline, ...values) + 0.02;
  const x = (i) => pad + (i / (values.length - 1)) * (width - 2 * pad);
  const y = (v) => height - pad - ((v - lo) / (hi - lo)) * (height - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, height - pad);
  ctx.lineTo(width - pad, height - pad);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  LAMBDAS.forEach((l, i) => ctx.fillText(String(l), x(i) - 8, height - pad + 16));
  ctx.fillText(hi.toFixed(2), 2, y(hi) + 4);
  ctx.fillText(lo.toFixed(2), 2, y(lo));

  ctx.setLineDash([6, 4]);
  ctx.beginPath();
  ctx.moveTo(pad, y(baseline));
  ctx.lineTo(width - pad, y(baseline));
  ctx.stroke();
  ctx.setLineDash([]);

  ctx.strokeStyle = "#1f5fbf";
  ctx.lineWidth = 2;
  ctx.beginPath();
  values.forEach((v, i) => (i ? ctx.lineTo(x(i), y(v)) : ctx.moveTo(x(i), y(v))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function drawHeatmap(canvas, values, rows, cols) {
  const ctx = canvas.getContext("2d");
  const scale = Math.max(...values.map(Math.abs)) || 1;
  const w = canvas.width / cols;
  const h = canvas.height / rows;
  values.forEach((v, k) => {
    const t = v / scale;
    const shade = Math.round(255 * (1 - Math.abs(t)));
    ctx.fillStyle = t >= 0 ? `rgb(255,${shade},${shade})` : `rgb(${shade},${shade},255)`;
    ctx.fillRect((k % cols) * w, Math.floor(k / cols) * h, Math.ceil(w), Math.ceil(h));
  });
}

function correlation(a, b) {
  const mean = (v) => v.reduce((s, x) => s + x, 0) / v.length;
  const ma = mean(a);
  const mb = mean(b);
  let sab = 0;
  let saa = 0;
  let sbb = 0;
  a.forEach((x, k) => {
    sab += (x - ma) * (b[k] - mb);
    saa += (x - ma) ** 2;
    sbb += (b[k] - mb) ** 2;
  });
  return sab / Math.sqrt(saa * sbb);
}

function showInteractions() {
  const lambda = LAMBDAS[Number($("lambda").value)];
  $("lambda-value").textContent = String(lambda);
  const rows = playground.tag_count;
  const cols = playground.question_count;
  const fitted = Array.from(playground.fitted_interactions(lambda));
  const planted = Array.from(playground.planted_interactions());
  drawHeatmap($("fitted"), fitted, rows, cols);
  drawHeatmap($("planted"), planted, rows, cols);
  $("agreement").textContent = `correlation with the planted matrix: ${correlation(fitted, planted).toFixed(3)}`;
}

function showScores() {
  const liked = [...document.querySelectorAll("#games input:checked")].map((box) => Number(box.value));
  const scores = playground.mvn_scores(new Uint32Array(liked));
  const ids = playground.game_ids();
  const skip = new Set(liked);
  const order = [...scores.keys()].filter((j) => !skip.has(j)).sort((a, b) => scores[b] - scores[a] || a - b);
  $("top").replaceChildren(
    ...order.slice(0, TOP).map((j, rank) => {
      const row = document.createElement("tr");
      for (const text of [rank + 1, ids[j], scores[j].toFixed(4)]) {
        const cell = document.createElement("td");
        cell.textContent = String(text);
        row.append(cell);
      }
      return row;
    }),
  );
}

function listGames() {
  $("games").replaceChildren(
    ...playground.game_ids().map((id, j) => {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.value = String(j);
      box.addEventListener("change", showScores);
      label.append(box, ` ${id}`);
      return label;
    }),
  );
}

function generate() {
  const num = (id) => Number($(id).value);
  setStatus("generating...");
  const start = performance.now();
  try {
    playground?.free();
    playground = new Playground(
      num("n"), num("m"), num("r"), num("s"), num("density"), num("rank"), num("noise"), BigInt(num("seed")),
    );
    drawSweep(Array.from(playground.lambda_sweep(new Float64Array(LAMBDAS))), playground.random_ndcg());
    showInteractions();
    listGames();
    showScores();
    setStatus(`${playground.like_count} likes, ready in ${Math.round(performance.now() - start)} ms`);
  } catch (e) {
    playground = null;
    setStatus(e.message ?? String(e), true);
  }
}

await init();
$("generate").addEventListener("click", generate);
$("lambda").addEventListener("input", () => playground && showInteractions());
generate();
