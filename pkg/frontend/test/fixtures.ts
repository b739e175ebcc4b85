/** Fixture states mirroring the service's session JSON, plus a scriptable
 * fake fetch that records every request. */

import type { SessionState } from "../src/api.js";

export const GRAPH_DRAFT = `graph review_sentiment

concept review
labels sentiment of review { positive, negative, neutral }
`;

export const SENSOR_DRAFT = JSON.stringify(
  {
    properties: [{ kind: "reader", concept: "review", property: "text", field: "text" }],
    edges: [],
    relations: [],
    models: [
      {
        label_set: "sentiment",
        mode: "mock",
        prompt: "Review: {text}",
        labels: ["positive", "negative", "neutral"],
      },
    ],
  },
  null,
  1,
);

export function baseState(overrides: Partial<SessionState> = {}): SessionState {
  return {
    id: "abc123def456",
    task: "Rate each product review",
    exclude: [],
    limit: 3,
    phase: "GraphDesign",
    rag_picks: ["review-sentiment"],
    drafts: [],
    attempts: 0,
    executor_notes: [],
    reviewer_notes: [],
    feedback: "",
    graph_source: null,
    sensor_draft: null,
    sensor_attempts: 0,
    sensor_notes: [],
    mapping: null,
    prompts: null,
    bundle: null,
    failure: null,
    attempt_tuple: [0, 0, 0],
    status: "running",
    ...overrides,
  };
}

/** The graph gate after one broken draft and one revised draft. */
export function graphGateState(overrides: Partial<SessionState> = {}): SessionState {
  return baseState({
    phase: "GraphHumanGate",
    status: "awaiting-human",
    drafts: ["graph broken\n", GRAPH_DRAFT],
    attempts: 2,
    executor_notes: ["error missing-concept at line 3: labels need a concept"],
    reviewer_notes: ["the label set is incomplete"],
    attempt_tuple: [2, 1, 1],
    ...overrides,
  });
}

export function sensorGateState(overrides: Partial<SessionState> = {}): SessionState {
  return baseState({
    phase: "SensorHumanGate",
    status: "awaiting-human",
    drafts: [GRAPH_DRAFT],
    attempts: 1,
    graph_source: GRAPH_DRAFT,
    sensor_draft: SENSOR_DRAFT,
    sensor_attempts: 1,
    attempt_tuple: [1, 0, 0],
    ...overrides,
  });
}

export function doneState(overrides: Partial<SessionState> = {}): SessionState {
  return baseState({
    phase: "Done",
    status: "done",
    drafts: [GRAPH_DRAFT],
    attempts: 1,
    graph_source: GRAPH_DRAFT,
    sensor_draft: SENSOR_DRAFT,
    sensor_attempts: 1,
    mapping: "text feeds the review concept",
    prompts: { sentiment: "Is this review positive, negative, or neutral?" },
    bundle: { "run.json": "{}" },
    attempt_tuple: [1, 0, 0],
    ...overrides,
  });
}

export interface Recorded {
  method: string;
  url: string;
  body: unknown;
  headers: Record<string, string>;
}

export type Reply = { status: number; body?: unknown; bytes?: ArrayBuffer };
export type Route = (req: Recorded) => Reply;

/** Scriptable fetch: routes keyed by "METHOD path", call log in `requests`. */
export class FakeService {
  requests: Recorded[] = [];
  routes = new Map<string, Route>();

  on(method: string, path: string, route: Reply | Route): void {
    this.routes.set(`${method} ${path}`, typeof route === "function" ? route : () => route);
  }

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const headers = Object.fromEntries(
      Object.entries((init?.headers as Record<string, string>) ?? {}).map(([k, v]) => [
        k.toLowerCase(),
        v,
      ]),
    );
    const req: Recorded = {
      method,
      url,
      body: init?.body ? JSON.parse(init.body as string) : undefined,
      headers,
    };
    this.requests.push(req);
    const route = this.routes.get(`${method} ${url}`);
    if (!route) {
      return new Response(
        JSON.stringify({ error: { code: "unknown-route", message: `${method} ${url}` } }),
        { status: 404 },
      );
    }
    const reply = route(req);
    if (reply.bytes !== undefined) {
      return new Response(reply.bytes, { status: reply.status });
    }
    return new Response(JSON.stringify(reply.body ?? {}), { status: reply.status });
  };

  sent(method: string, path: string): Recorded[] {
    return this.requests.filter((r) => r.method === method && r.url === path);
  }
}
