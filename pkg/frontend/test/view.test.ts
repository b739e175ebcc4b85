import { describe, expect, it } from "vitest";

import { viewModel } from "../src/state.js";
import { availableTabs, escapeHtml, renderDashboard, renderLogin, renderSessionList } from "../src/view.js";
import { baseState, doneState, graphGateState, sensorGateState, SENSOR_DRAFT } from "./fixtures.js";

describe("graph gate", () => {
  const html = renderDashboard(viewModel(graphGateState()));

  it("shows the draft, both red badges, and the progress timeline", () => {
    expect(html).toContain("labels sentiment of review");
    expect(html).toContain(`class="badge red" data-badge="executor"`);
    expect(html).toContain(`class="badge red" data-badge="reviewer"`);
    expect(html).toContain(`<ol class="timeline">`);
    expect(html).toContain(`class="current" data-phase="GraphHumanGate"`);
  });

  it("offers approve and a feedback box", () => {
    expect(html).toContain(`data-action="approve-graph"`);
    expect(html).toContain(`data-role="feedback"`);
    expect(html).toContain(`data-action="revise-graph"`);
  });

  it("keeps earlier drafts reachable and shows the notes", () => {
    expect(html).toContain("graph broken");
    expect(html).toContain("execution log");
    expect(html).toContain("the label set is incomplete");
  });

  it("turns green when the checks were clean", () => {
    const clean = renderDashboard(
      viewModel(graphGateState({ executor_notes: [], reviewer_notes: [] })),
    );
    expect(clean).toContain(`class="badge green" data-badge="executor"`);
    expect(clean).toContain(`class="badge green" data-badge="reviewer"`);
  });
});

describe("other stages", () => {
  it("renders nothing it does not have", () => {
    const html = renderDashboard(viewModel(baseState()));
    expect(html).toContain("No draft yet");
    expect(html).not.toContain("data-badge");
    expect(html).not.toContain("data-action=\"approve-graph\"");
  });

  it("gives the sensor gate an editable pane", () => {
    const html = renderDashboard(viewModel(sensorGateState()));
    expect(html).toContain(`<textarea class="code" data-role="sensor-editor">`);
    expect(html).toContain("mock");
    expect(html).toContain(`data-action="approve-sensor"`);
    expect(html).toContain(`data-action="edit-sensor"`);
  });

  it("shows the binding spec read-only outside the gate", () => {
    const state = doneState();
    const html = renderDashboard(viewModel(state), "sensor");
    expect(html).toContain(`data-role="sensor-spec"`);
    expect(html).not.toContain("data-role=\"sensor-editor\"");
  });

  it("renders the mapping form only while mapping is awaited", () => {
    const waiting = renderDashboard(
      viewModel(sensorGateState({ phase: "PropertyInput", sensor_attempts: 1 })),
    );
    expect(waiting).toContain(`data-role="mapping-text"`);
    expect(waiting).toContain(`data-action="submit-mapping"`);
    const done = renderDashboard(viewModel(doneState()), "mapping");
    expect(done).toContain("text feeds the review concept");
    expect(done).not.toContain("data-role=\"mapping-text\"");
  });

  it("renders the download link once exported", () => {
    const html = renderDashboard(viewModel(doneState()));
    expect(html).toContain(`data-action="download"`);
    const unfinished = renderDashboard(viewModel(graphGateState()));
    expect(unfinished).not.toContain(`data-action="download"`);
  });

  it("shows the failure banner on a failed run", () => {
    const html = renderDashboard(
      viewModel(baseState({ phase: "Failed", status: "failed", failure: "export refused" })),
    );
    expect(html).toContain(`data-role="failure"`);
    expect(html).toContain("export refused");
  });
});

describe("tabs", () => {
  it("exposes exactly the stages that produced something", () => {
    expect(availableTabs(viewModel(baseState()))).toEqual([]);
    expect(availableTabs(viewModel(graphGateState()))).toEqual(["graph"]);
    expect(availableTabs(viewModel(sensorGateState()))).toEqual(["graph", "sensor"]);
    expect(availableTabs(viewModel(doneState()))).toEqual([
      "graph",
      "sensor",
      "mapping",
      "export",
    ]);
  });

  it("lets a prior phase be inspected without losing the gate controls", () => {
    const html = renderDashboard(viewModel(doneState()), "graph");
    expect(html).toContain(`data-panel="graph"`);
    expect(html).toContain("labels sentiment of review");
  });
});

describe("rendering hygiene", () => {
  it("escapes markup smuggled into drafts and tasks", () => {
    const hostile = graphGateState({
      task: `<img src=x onerror=alert(1)>`,
      drafts: ["graph g\n", `graph g2 <script>alert("x")</script>\n`],
    });
    const html = renderDashboard(viewModel(hostile));
    expect(html).not.toContain("<script>");
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;script&gt;");
  });

  it("escapeHtml covers the five specials", () => {
    expect(escapeHtml(`<a href="x">&'</a>`)).toBe(
      "&lt;a href=&quot;x&quot;&gt;&amp;&#39;&lt;/a&gt;",
    );
  });

  it("is reload-stable: the same state renders the same markup", () => {
    const state = graphGateState();
    expect(renderDashboard(viewModel(state))).toBe(renderDashboard(viewModel(state)));
  });

  it("embeds the binding spec text verbatim-escaped", () => {
    const html = renderDashboard(viewModel(sensorGateState()));
    expect(html).toContain(escapeHtml(SENSOR_DRAFT));
  });
});

describe("login and session list", () => {
  it("renders a token prompt with the failure message", () => {
    const html = renderLogin("missing bearer token");
    expect(html).toContain(`data-role="token"`);
    expect(html).toContain("missing bearer token");
  });

  it("lists sessions with open links and a create form", () => {
    const html = renderSessionList([
      { id: "s1", status: "awaiting-human", state: { task: "label reviews" } },
      { id: "s2", status: "done", state: {} },
    ]);
    expect(html).toContain(`data-session="s1"`);
    expect(html).toContain("label reviews");
    expect(html).toContain(`data-session="s2"`);
    expect(html).toContain(`data-action="create"`);
  });
});
