/** HTML-string renderers. Pure functions of the view model so the same
 * fetched state always produces the same markup, in tests and in the page. */

import type { TimelineStep, Verdict, ViewModel } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function badge(label: string, verdict: Verdict): string {
  const red = verdict === "fail" || verdict === "revise";
  return `<span class="badge ${red ? "red" : "green"}" data-badge="${label}">${label}: ${verdict}</span>`;
}

function notes(title: string, items: string[]): string {
  if (!items.length) return "";
  const lis = items.map((n) => `<li>${escapeHtml(n)}</li>`).join("");
  return `<details open><summary>${title}</summary><ul class="notes">${lis}</ul></details>`;
}

function timelineHtml(steps: TimelineStep[]): string {
  const lis = steps
    .map((s) => `<li class="${s.state}" data-phase="${s.phase}">${s.phase}</li>`)
    .join("");
  return `<ol class="timeline">${lis}</ol>`;
}

export type Tab = "graph" | "sensor" | "mapping" | "export";

/** Tabs exist only for stages that have produced something to look at. */
export function availableTabs(vm: ViewModel): Tab[] {
  const tabs: Tab[] = [];
  if (vm.draft !== null) tabs.push("graph");
  if (vm.sensorDraft !== null) tabs.push("sensor");
  if (vm.mapping !== null || vm.gate === "mapping") tabs.push("mapping");
  if (vm.exported) tabs.push("export");
  return tabs;
}

export function defaultTab(vm: ViewModel): Tab {
  if (vm.exported) return "export";
  if (vm.gate === "mapping" || vm.phase === "PropertyDesignate") return "mapping";
  if (vm.gate === "sensor" || vm.phase === "SensorDesign") return "sensor";
  return "graph";
}

function graphPanel(vm: ViewModel): string {
  const parts: string[] = [];
  if (vm.draft === null) {
    return `<p class="empty">No draft yet.</p>`;
  }
  parts.push(
    `<p class="meta">attempt ${vm.attempts} of ${vm.limit}</p>`,
    vm.executorVerdict ? badge("executor", vm.executorVerdict) : "",
    vm.reviewerVerdict ? badge("reviewer", vm.reviewerVerdict) : "",
    `<pre class="code" data-role="draft">${escapeHtml(vm.draft)}</pre>`,
    notes("execution log", vm.executorNotes),
    notes("reviewer notes", vm.reviewerNotes),
  );
  if (vm.draftHistory.length) {
    const old = vm.draftHistory
      .map((d, i) => `<details><summary>draft ${i + 1}</summary><pre class="code">${escapeHtml(d)}</pre></details>`)
      .join("");
    parts.push(`<div class="history">${old}</div>`);
  }
  if (vm.gate === "graph") {
    parts.push(
      `<form class="gate" data-role="graph-gate">`,
      `<button type="button" data-action="approve-graph">Approve</button>`,
      `<textarea data-role="feedback" placeholder="What should change?"></textarea>`,
      `<button type="button" data-action="revise-graph">Send revision</button>`,
      `</form>`,
    );
  }
  return parts.join("\n");
}

function sensorPanel(vm: ViewModel): string {
  if (vm.sensorDraft === null) return `<p class="empty">No binding spec yet.</p>`;
  const parts: string[] = [notes("sensor notes", vm.sensorNotes)];
  if (vm.gate === "sensor") {
    parts.push(
      `<textarea class="code" data-role="sensor-editor">${escapeHtml(vm.sensorDraft)}</textarea>`,
      `<form class="gate" data-role="sensor-gate">`,
      `<button type="button" data-action="approve-sensor">Approve</button>`,
      `<button type="button" data-action="edit-sensor">Apply edit</button>`,
      `</form>`,
    );
  } else {
    parts.push(`<pre class="code" data-role="sensor-spec">${escapeHtml(vm.sensorDraft)}</pre>`);
  }
  return parts.join("\n");
}

function mappingPanel(vm: ViewModel): string {
  const parts: string[] = [];
  if (vm.graphSource !== null) {
    parts.push(
      `<details><summary>approved graph</summary><pre class="code">${escapeHtml(vm.graphSource)}</pre></details>`,
    );
  }
  if (vm.gate === "mapping") {
    parts.push(
      `<form class="gate" data-role="mapping-gate">`,
      `<textarea data-role="mapping-text" placeholder="Which dataset fields feed which concepts?"></textarea>`,
      `<button type="button" data-action="submit-mapping">Submit mapping</button>`,
      `</form>`,
    );
  } else if (vm.mapping !== null) {
    parts.push(`<p data-role="mapping-view">${escapeHtml(vm.mapping)}</p>`);
  } else {
    parts.push(`<p class="empty">Mapping not provided yet.</p>`);
  }
  return parts.join("\n");
}

function exportPanel(vm: ViewModel): string {
  if (!vm.exported) return `<p class="empty">Nothing exported yet.</p>`;
  return `<a href="#" data-action="download" data-session="${vm.id}">Download notebook</a>`;
}

const PANELS: Record<Tab, (vm: ViewModel) => string> = {
  graph: graphPanel,
  sensor: sensorPanel,
  mapping: mappingPanel,
  export: exportPanel,
};

export function renderDashboard(vm: ViewModel, tab?: Tab): string {
  const tabs = availableTabs(vm);
  const active = tab && tabs.includes(tab) ? tab : defaultTab(vm);
  const tabButtons = tabs
    .map(
      (t) =>
        `<button type="button" data-tab="${t}" class="${t === active ? "active" : ""}">${t}</button>`,
    )
    .join("");
  const failure = vm.failure
    ? `<div class="failure" data-role="failure">${escapeHtml(vm.failure)}</div>`
    : "";
  const [a, r, e] = vm.attemptTuple;
  return [
    `<header>`,
    `<h1>${escapeHtml(vm.task)}</h1>`,
    `<p class="meta">session ${vm.id} · ${vm.phase} · (${a},${r},${e})</p>`,
    `<button type="button" data-action="new-task">New task</button>`,
    `</header>`,
    failure,
    timelineHtml(vm.timeline),
    `<nav class="tabs">${tabButtons}</nav>`,
    `<section class="panel" data-panel="${active}">${PANELS[active](vm)}</section>`,
  ].join("\n");
}

export function renderLogin(message = ""): string {
  return [
    `<form class="login" data-role="login">`,
    message ? `<p class="failure">${escapeHtml(message)}</p>` : "",
    `<label>API token <input type="password" data-role="token"></label>`,
    `<button type="button" data-action="login">Sign in</button>`,
    `</form>`,
  ].join("\n");
}

export function renderSessionList(
  sessions: { id: string; status: string; state: Record<string, unknown> }[],
): string {
  const rows = sessions
    .map((s) => {
      const task = typeof s.state.task === "string" ? s.state.task : "";
      return `<li><a href="#" data-action="open" data-session="${s.id}">${escapeHtml(
        task || s.id,
      )}</a> <span class="meta">${s.status}</span></li>`;
    })
    .join("");
  return [
    `<header><h1>Sessions</h1></header>`,
    `<form data-role="create"><input data-role="task" placeholder="Describe the task">`,
    `<button type="button" data-action="create">Start</button></form>`,
    `<ul class="sessions">${rows}</ul>`,
  ].join("\n");
}
