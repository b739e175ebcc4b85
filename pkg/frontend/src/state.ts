/** Pure projection from a fetched SessionState to what the dashboard shows.
 * No field is defaulted or invented: absent data stays absent in the view. */

import type { SessionState } from "./api.js";

export const PHASES = [
  "RagSelect",
  "GraphDesign",
  "GraphCheck",
  "GraphHumanGate",
  "SensorDesign",
  "SensorHumanGate",
  "PropertyInput",
  "PropertyDesignate",
  "Export",
  "Done",
] as const;

export type Gate = "graph" | "sensor" | "mapping" | null;

export function gateOf(phase: string): Gate {
  if (phase === "GraphHumanGate") return "graph";
  if (phase === "SensorHumanGate") return "sensor";
  if (phase === "PropertyInput") return "mapping";
  return null;
}

/** Agent phases keep the 1s poll alive; gates and terminal phases pause it. */
export function isActive(phase: string): boolean {
  return gateOf(phase) === null && phase !== "Done" && phase !== "Failed";
}

export interface TimelineStep {
  phase: string;
  state: "done" | "current" | "todo" | "failed";
}

export function timeline(state: SessionState): TimelineStep[] {
  if (state.phase === "Failed") {
    // show every ordinary phase as context, flag the run itself as failed
    const steps: TimelineStep[] = PHASES.map((p) => ({ phase: p, state: "todo" }));
    steps.push({ phase: "Failed", state: "failed" });
    return steps;
  }
  const at = PHASES.indexOf(state.phase as (typeof PHASES)[number]);
  return PHASES.map((p, i) => ({
    phase: p,
    state: i < at ? "done" : i === at ? "current" : "todo",
  }));
}

export type Verdict = "pass" | "fail" | "approve" | "revise";

export interface ViewModel {
  id: string;
  task: string;
  phase: string;
  status: SessionState["status"];
  gate: Gate;
  polling: boolean;
  timeline: TimelineStep[];
  attemptTuple: [number, number, number];
  /* graph stage, present once a draft exists */
  draft: string | null;
  draftHistory: string[];
  attempts: number;
  limit: number;
  executorVerdict: Verdict | null;
  executorNotes: string[];
  reviewerVerdict: Verdict | null;
  reviewerNotes: string[];
  feedback: string;
  /* later stages, present once reached */
  graphSource: string | null;
  sensorDraft: string | null;
  sensorNotes: string[];
  mapping: string | null;
  prompts: Record<string, string> | null;
  failure: string | null;
  exported: boolean;
}

export function viewModel(state: SessionState): ViewModel {
  const hasDraft = state.drafts.length > 0;
  return {
    id: state.id,
    task: state.task,
    phase: state.phase,
    status: state.status,
    gate: gateOf(state.phase),
    polling: isActive(state.phase),
    timeline: timeline(state),
    attemptTuple: state.attempt_tuple,
    draft: hasDraft ? state.drafts[state.drafts.length - 1]! : null,
    draftHistory: state.drafts.slice(0, -1),
    attempts: state.attempts,
    limit: state.limit,
    // notes only accumulate on executor failures / reviewer revises, so
    // their presence is the verdict; before any check there is no verdict
    executorVerdict: hasDraft ? (state.executor_notes.length ? "fail" : "pass") : null,
    executorNotes: state.executor_notes,
    reviewerVerdict: hasDraft ? (state.reviewer_notes.length ? "revise" : "approve") : null,
    reviewerNotes: state.reviewer_notes,
    feedback: state.feedback,
    graphSource: state.graph_source,
    sensorDraft: state.sensor_draft,
    sensorNotes: state.sensor_notes,
    mapping: state.mapping,
    prompts: state.prompts,
    failure: state.failure,
    exported: state.phase === "Done" && state.bundle !== null,
  };
}
