import init, { relax, distance_field, bucket_distances } from "./pkg/sauna_web.js";

const EXTENT = 100;
const canvas = document.getElementById("plot");
const ctx = canvas.getContext("2d");
const scale = canvas.width / EXTENT;
let query = [[70, 75], [20, 22]];
let drag = null;

const $ = (id) => document.getElementById(id);
const px = (x) => x * scale;
const py = (y) => canvas.height - y * scale;

function config() {
  const weighting = $("weighting").value === "uniform" ? { explicit: [1, 1] } : $("weighting").value;
  return {
    kind: $("kind").value,
    points: +$("points").value,
    zipf: +$("zipf").value,
    bells: +$("bells").value,
    seed: +$("seed").value,
    budget: +$("budget").value,
    query,
    n: +$("n").value,
    alpha: +$("alpha").value,
    norm: $("norm").value,
    weighting,
    mode: $("mode").value,
  };
}

function strokeBox(b, color, width = 1, dash = []) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dash);
  ctx.strokeRect(px(b[0][0]), py(b[1][1]), (b[0][1] - b[0][0]) * scale, (b[1][1] - b[1][0]) * scale);
  ctx.setLineDash([]);
}

function dot(p, color, r) {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(px(p[0]), py(p[1]), r, 0, 2 * Math.PI);
  ctx.fill();
}

function drawField(cfgJson) {
  const field = JSON.parse(distance_field(cfgJson, 120));
  const cell = canvas.width / field.resolution;
  for (let j = 0; j < field.resolution; j++) {
    for (let i = 0; i < field.resolution; i++) {
      const t = Math.sqrt(field.values[j * field.resolution + i] / (field.max || 1));
      ctx.fillStyle = `hsl(${220 - 220 * t}, 70%, 85%)`;
      ctx.fillRect(i * cell, canvas.height - (j + 1) * cell, cell + 1, cell + 1);
    }
  }
}

function render() {
  $("error").textContent = "";
  const cfgJson = JSON.stringify(config());
  let view;
  try {
    view = JSON.parse(relax(cfgJson));
  } catch (e) {
    $("error").textContent = e.message ?? String(e);
    return;
  }
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if ($("show-field").checked) drawField(cfgJson);
  if ($("show-buckets").checked) {
    for (const b of view.buckets) strokeBox([[b.lo[0], b.hi[0]], [b.lo[1], b.hi[1]]], "#bbb");
  }
  for (const p of view.points) dot(p, "#555", 1.2);
  const answers = new Set(view.answers);
  for (const row of answers) dot(view.points[row], "#d40", 3);
  for (const row of view.optimal_answers) {
    if (!answers.has(row)) dot(view.points[row], "#09c", 3);
  }
  if (view.relaxed) strokeBox(view.relaxed, "#e90", 2, [6, 4]);
  if (view.restart) strokeBox(view.restart, "#a0a", 2, [2, 3]);
  strokeBox(view.query, "#d40", 2);
  if ($("show-bucket-dist").checked) {
    for (const b of JSON.parse(bucket_distances(cfgJson))) {
      dot(b.nearest, "#0a0", 2);
      dot(b.farthest, "#a00", 2);
    }
  }
  const fmt = (x) => (x == null ? "-" : x.toFixed(3));
  $("summary").textContent = [
    `estimate in query: ${view.estimate.toFixed(1)}`,
    `restarts distance: ${fmt(view.d_br)}`,
    `no-restarts distance: ${fmt(view.d_bnr)}`,
    `chosen distance: ${fmt(view.chosen_distance)}`,
    `queries issued: ${view.stats.queries_issued}`,
    `restarted: ${view.stats.restarted}`,
    `tuples retrieved: ${view.stats.tuples_retrieved}`,
    `answers: ${view.answers.length}`,
  ].join("\n");
}

function toData(ev) {
  const r = canvas.getBoundingClientRect();
  const x = ((ev.clientX - r.left) / r.width) * EXTENT;
  const y = EXTENT - ((ev.clientY - r.top) / r.height) * EXTENT;
  return [Math.min(Math.max(x, 0), EXTENT), Math.min(Math.max(y, 0), EXTENT)];
}

canvas.addEventListener("mousedown", (ev) => { drag = toData(ev); });
canvas.addEventListener("mouseup", (ev) => {
  if (!drag) return;
  const end = toData(ev);
  query = [[drag[0], end[0]].sort((a, b) => a - b), [drag[1], end[1]].sort((a, b) => a - b)];
  drag = null;
  render();
});

$("alpha").addEventListener("input", () => { $("alpha-out").textContent = $("alpha").value; });
for (const el of document.querySelectorAll("input, select")) el.addEventListener("change", render);

await init();
render();
