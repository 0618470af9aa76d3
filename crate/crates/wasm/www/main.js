import init, { SearchDemo, evaluate, fuse } from "./pkg/scisearch_wasm.js";

const $ = (id) => document.getElementById(id);

function fill(table, header, rows) {
  table.replaceChildren();
  const head = table.insertRow();
  for (const h of header) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  for (const row of rows) {
    const tr = table.insertRow();
    for (const cell of row) {
      const td = tr.insertCell();
      if (typeof cell === "number") {
        td.className = "num";
        td.textContent = Number.isInteger(cell) ? String(cell) : cell.toFixed(6);
      } else {
        td.textContent = cell ?? "-";
      }
    }
  }
}

function guarded(errorId, fn) {
  return () => {
    $(errorId).textContent = "";
    try {
      fn();
    } catch (e) {
      $(errorId).textContent = e.message ?? String(e);
    }
  };
}

await init();
const demo = new SearchDemo();
$("status").textContent = `${demo.documents()} documents indexed in the browser`;

const runSearch = guarded("search-error", () => {
  const mu = Number($("mu").value);
  const k = Number($("k").value);
  $("mu-value").textContent = mu.toFixed(2);
  $("k-value").textContent = k;
  $("summary").textContent = "";
  $("search-results").replaceChildren();
  const response = JSON.parse(demo.search($("query").value, 10, mu, k));
  fill(
    $("search-results"),
    ["doc", "title", "final", "rrf", "q", "s"],
    response.results.map((r) => [r.doc_id, r.title, r.final, r.rrf, r.q_factor, r.s_factor]),
  );
  $("summary").textContent = response.summary;
});

const runEval = guarded("eval-error", () => {
  $("eval-results").replaceChildren();
  const report = JSON.parse(evaluate($("qrels").value, $("run").value, $("ndcg").value, $("bpref").value));
  const cols = ["bpref", "map", "p_at_5", "p_at_10", "ndcg_at_10", "judged_at_5", "judged_at_10"];
  const rows = Object.entries(report.per_topic).map(([t, m]) => [t, ...cols.map((c) => m[c])]);
  rows.push(["mean", ...cols.map((c) => report.mean[c])]);
  fill($("eval-results"), ["topic", "Bpref", "MAP", "P@5", "P@10", "nDCG@10", "Judged@5", "Judged@10"], rows);
});

const runFuse = guarded("fuse-error", () => {
  $("fuse-results").replaceChildren();
  const rows = JSON.parse(fuse($("list-c").value, $("list-b").value, Number($("fuse-k").value)));
  fill($("fuse-results"), ["doc", "rrf", "rank in first", "rank in second"], rows.map((r) => [r.doc_id, r.score, r.rank_c, r.rank_b]));
});

for (const id of ["query", "mu", "k"]) $(id).addEventListener("input", runSearch);
for (const id of ["qrels", "run", "ndcg", "bpref"]) $(id).addEventListener("input", runEval);
for (const id of ["list-c", "list-b", "fuse-k"]) $(id).addEventListener("input", runFuse);
runSearch();
runEval();
runFuse();
