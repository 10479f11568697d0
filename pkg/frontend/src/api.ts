/** Typed HTTP client for the tutoring service.
 *
 * Field names mirror the server's wire contract exactly; responses are
 * shape-checked at the boundary so contract drift fails fast instead of
 * surfacing as undefined reads deep inside the UI.
 */

export type Outcome = "Correct" | "Buggy" | "Undetectable" | "NoInput";
export type FeedbackKind = "KR" | "TA" | "ES" | "WE" | "DI";
export type SpecificityLevel = "Low" | "High";
export type Context = "main" | "subtask";

export interface Task {
  kind: string;
  x: number[];
  y: number[];
  givenRate: number | null;
  question: string;
}

export interface FeedbackMessage {
  type: FeedbackKind;
  specificity: SpecificityLevel | null;
  text: string;
}

export interface Actions {
  canSubmit: boolean;
  canTryAgain: boolean;
  canSubtask: boolean;
  canViewDI: boolean;
  canViewWE: boolean;
  canReturnToMain: boolean;
}

export interface Diagnosis {
  outcome: Outcome;
  chain: string[];
  rounding: number | null;
  matchedValue: number | null;
}

export interface WorkedExample {
  steps: string[];
  answer: number;
}

export interface Video {
  video: string;
  placeholder: boolean;
}

export interface Envelope {
  sessionId: string;
  requestKind: string;
  context: Context;
  task: Task | null;
  feedback: FeedbackMessage[] | null;
  diagnosis: Diagnosis | null;
  actions: Actions;
  workedExample: WorkedExample | null;
  video: Video | null;
  mainSolved: boolean;
  subtaskSolved: boolean;
  ended: boolean;
}

export interface LogEvent {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
  ts: string;
}

export interface SessionLog {
  sessionId: string;
  events: LogEvent[];
}

export interface HealthInfo {
  status: string;
  version: string;
  topics: string[];
}

export interface RuleDoc {
  id: string;
  topic: string;
  stage: string;
  buggy: boolean;
  formula: string;
  feedbackLow: string | null;
  feedbackHigh: string | null;
  routeTo: string | null;
}

/** The request never reached the service (DNS, refused, dropped, ...). */
export class NetworkError extends Error {
  constructor(message: string, override readonly cause?: unknown) {
    super(message);
    this.name = "NetworkError";
  }
}

/** The service answered with an error envelope. */
export class ApiHttpError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly actions: Actions | null = null,
  ) {
    super(message);
    this.name = "ApiHttpError";
  }
}

export interface RequestRecord {
  method: string;
  path: string;
  status: number;
}

const ACTION_KEYS = [
  "canSubmit",
  "canTryAgain",
  "canSubtask",
  "canViewDI",
  "canViewWE",
  "canReturnToMain",
] as const;

const ENVELOPE_KEYS = [
  "sessionId",
  "requestKind",
  "context",
  "task",
  "feedback",
  "diagnosis",
  "actions",
  "workedExample",
  "video",
  "mainSolved",
  "subtaskSolved",
  "ended",
] as const;

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function checkActions(value: unknown): Actions {
  if (!isRecord(value)) {
    throw new TypeError("actions is not an object");
  }
  for (const key of ACTION_KEYS) {
    if (typeof value[key] !== "boolean") {
      throw new TypeError(`actions.${key} is not a boolean`);
    }
  }
  return value as unknown as Actions;
}

function checkEnvelope(value: unknown): Envelope {
  if (!isRecord(value)) {
    throw new TypeError("response is not an object");
  }
  for (const key of ENVELOPE_KEYS) {
    if (!(key in value)) {
      throw new TypeError(`response is missing "${key}"`);
    }
  }
  if (typeof value.sessionId !== "string" || typeof value.requestKind !== "string") {
    throw new TypeError("response ids are not strings");
  }
  if (value.context !== "main" && value.context !== "subtask") {
    throw new TypeError(`unknown context ${JSON.stringify(value.context)}`);
  }
  checkActions(value.actions);
  return value as unknown as Envelope;
}

export class TutorClient {
  /** Every request this client ever made, with the HTTP status it got.
   * Lets tests assert that a gated UI produced zero illegal calls. */
  readonly requests: RequestRecord[] = [];

  private readonly fetchFn: (input: string, init?: RequestInit) => Promise<Response>;

  constructor(
    readonly baseUrl: string,
    fetchFn?: (input: string, init?: RequestInit) => Promise<Response>,
  ) {
    // wrap instead of storing the bare global: browser fetch must not be
    // called with a foreign `this`
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async send(method: "GET" | "POST", path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = { method, headers: { Accept: "application/json" } };
    if (body !== undefined) {
      init.headers = { ...init.headers, "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (cause) {
      throw new NetworkError(`${method} ${path}: request did not reach the server`, cause);
    }
    this.requests.push({ method, path, status: response.status });
    const data: unknown = await response.json();
    if (!response.ok) {
      const error = isRecord(data) && isRecord(data.error) ? data.error : {};
      const code = typeof error.code === "string" ? error.code : "unknown_error";
      const message = typeof error.message === "string" ? error.message : response.statusText;
      const actions = "actions" in error && error.actions != null ? checkActions(error.actions) : null;
      throw new ApiHttpError(response.status, code, message, actions);
    }
    return data;
  }

  private async sendEnvelope(method: "GET" | "POST", path: string, body?: unknown): Promise<Envelope> {
    return checkEnvelope(await this.send(method, path, body));
  }

  health(): Promise<HealthInfo> {
    return this.send("GET", "/health") as Promise<HealthInfo>;
  }

  async rules(): Promise<RuleDoc[]> {
    const data = await this.send("GET", "/rules");
    if (!isRecord(data) || !Array.isArray(data.rules)) {
      throw new TypeError("rules response is malformed");
    }
    return data.rules as RuleDoc[];
  }

  createSession(topic: string, sessionId?: string): Promise<Envelope> {
    const body: Record<string, unknown> = { topic };
    if (sessionId !== undefined) {
      body.sessionId = sessionId;
    }
    return this.sendEnvelope("POST", "/sessions", body);
  }

  submitAnswer(sessionId: string, value: number | null): Promise<Envelope> {
    return this.sendEnvelope("POST", `/sessions/${sessionId}/answer`, { value });
  }

  chooseSubtask(sessionId: string): Promise<Envelope> {
    return this.sendEnvelope("POST", `/sessions/${sessionId}/subtask`, {});
  }

  returnToMain(sessionId: string): Promise<Envelope> {
    return this.sendEnvelope("POST", `/sessions/${sessionId}/return`, {});
  }

  viewInstruction(sessionId: string): Promise<Envelope> {
    return this.sendEnvelope("POST", `/sessions/${sessionId}/instruction`, {});
  }

  viewWorkedExample(sessionId: string): Promise<Envelope> {
    return this.sendEnvelope("POST", `/sessions/${sessionId}/worked-example`, {});
  }

  declareStuck(sessionId: string): Promise<Envelope> {
    return this.sendEnvelope("POST", `/sessions/${sessionId}/stuck`, {});
  }

  closeSession(sessionId: string): Promise<Envelope> {
    return this.sendEnvelope("POST", `/sessions/${sessionId}/close`, {});
  }

  async getLog(sessionId: string): Promise<SessionLog> {
    const data = await this.send("GET", `/sessions/${sessionId}/log`);
    if (!isRecord(data) || typeof data.sessionId !== "string" || !Array.isArray(data.events)) {
      throw new TypeError("log response is malformed");
    }
    return data as unknown as SessionLog;
  }
}
