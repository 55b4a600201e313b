import init, { staticSlice, dynamicSlice, dependences } from "./pkg/slicebench_demo.js";

const EXAMPLE = `public class Demo {
    public static int main(String[] args) {
        int n = 4;
        int sum = 0;
        int unused = 7;
        if (n > 10) {
            sum = 100;
        }
        for (int i = 0; i < n; i++) {
            sum += i;
        }
        return sum;
    }
}
`;

const $ = (id) => document.getElementById(id);
const source = $("source");
const status = $("status");
const listing = $("listing");
const details = $("details");
let edges = [];

function say(text, isError = false) {
  status.textContent = text;
  status.className = isError ? "error" : "";
}

// Renders the program with `lines` highlighted; clicking a line shows what it depends on.
function render(lines, criterion) {
  const keep = new Set(lines);
  listing.replaceChildren();
  source.value.replace(/\n$/, "").split("\n").forEach((text, i) => {
    const li = document.createElement("li");
    const n = i + 1;
    li.textContent = text || " ";
    if (keep.has(n)) li.classList.add("in");
    if (n === criterion) li.classList.add("criterion");
    li.title = `line ${n}`;
    li.addEventListener("click", () => showDeps(n));
    listing.appendChild(li);
  });
}

function showDeps(line) {
  if (!edges.length) return;
  const incoming = edges.filter((e) => e.to_line === line && e.from_line !== line);
  for (const li of listing.children) li.classList.remove("dep");
  for (const e of incoming) listing.children[e.from_line - 1]?.classList.add("dep");
  details.textContent = incoming.length
    ? incoming.map((e) => `${e.from_line} -> ${line}  ${e.kind}${e.var ? " " + e.var : ""}`).join("\n")
    : `line ${line} depends on nothing`;
}

function run(label, fn) {
  const line = Number($("line").value);
  try {
    const started = performance.now();
    const view = JSON.parse(fn(line));
    const ms = (performance.now() - started).toFixed(1);
    render(view.lines, line);
    const extra = view.result !== undefined ? `, main returned ${view.result} after ${view.steps} steps` : "";
    say(`${label}: ${view.lines.length} lines in ${ms} ms${extra}`);
    details.textContent = view.output;
  } catch (err) {
    say(String(err.message ?? err), true);
  }
}

$("static").addEventListener("click", () =>
  run("static slice", (line) => staticSlice(source.value, $("variable").value.trim(), line, $("structural").checked)));
$("dynamic").addEventListener("click", () =>
  run("dynamic slice", (line) => dynamicSlice(source.value, line, $("structural").checked)));
$("deps").addEventListener("click", () => {
  try {
    const g = JSON.parse(dependences(source.value));
    edges = g.edges;
    render([], 0);
    say(`${edges.length} dependence edges; click a line to see what it depends on`);
    details.textContent = g.dot;
  } catch (err) {
    say(String(err.message ?? err), true);
  }
});
source.addEventListener("input", () => { edges = []; });

source.value = EXAMPLE;
render([], 0);
await init();
say("ready");
