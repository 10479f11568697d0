/** Pure view state: everything the UI renders is derived from here, and
 * every change goes through `reduce`, so behaviour is testable without a
 * DOM or a server. */

import type {
  Actions,
  Context,
  Diagnosis,
  Envelope,
  FeedbackMessage,
  Task,
  Video,
  WorkedExample,
} from "./api.js";

export interface AttemptRecord {
  context: Context;
  submitted: number | null;
  outcome: string;
  solved: boolean;
}

export const NO_ACTIONS: Actions = {
  canSubmit: false,
  canTryAgain: false,
  canSubtask: false,
  canViewDI: false,
  canViewWE: false,
  canReturnToMain: false,
};

export interface ViewState {
  sessionId: string | null;
  context: Context;
  task: Task | null;
  actions: Actions;
  feedback: FeedbackMessage[];
  diagnosis: Diagnosis | null;
  workedExample: WorkedExample | null;
  video: Video | null;
  mainSolved: boolean;
  subtaskSolved: boolean;
  ended: boolean;
  /** The instruction video is a one-shot: once viewed, its button is
   * removed for good, not merely disabled. */
  instructionUsed: boolean;
  history: AttemptRecord[];
  /** Non-null while the last request never reached the server; the UI
   * shows a retry banner and keeps all inputs untouched. */
  failure: string | null;
}

export const INITIAL_STATE: ViewState = {
  sessionId: null,
  context: "main",
  task: null,
  actions: NO_ACTIONS,
  feedback: [],
  diagnosis: null,
  workedExample: null,
  video: null,
  mainSolved: false,
  subtaskSolved: false,
  ended: false,
  instructionUsed: false,
  history: [],
  failure: null,
};

export type ViewAction =
  | { type: "envelope"; envelope: Envelope; submitted?: number | null }
  | { type: "network-failure"; message: string }
  | { type: "dismiss-failure" };

export function reduce(state: ViewState, action: ViewAction): ViewState {
  switch (action.type) {
    case "network-failure":
      return { ...state, failure: action.message };
    case "dismiss-failure":
      return { ...state, failure: null };
    case "envelope": {
      const env = action.envelope;
      const contextChanged = env.context !== state.context;
      const answered = env.requestKind === "submit-answer";

      // panels stay up while the student works, but a new attempt or a
      // context switch makes them stale
      let workedExample = env.workedExample ?? state.workedExample;
      let video = env.video ?? state.video;
      if (contextChanged || answered) {
        workedExample = env.workedExample;
        video = env.video ?? (contextChanged ? null : video);
      }

      let history = state.history;
      if (answered) {
        history = [
          ...history,
          {
            context: env.context,
            submitted: action.submitted ?? null,
            outcome: env.diagnosis?.outcome ?? "Unknown",
            solved: env.context === "main" ? env.mainSolved : env.subtaskSolved,
          },
        ];
      }

      return {
        sessionId: env.sessionId,
        context: env.context,
        task: env.task,
        actions: env.actions,
        feedback: env.feedback ?? [],
        diagnosis: env.diagnosis,
        workedExample,
        video,
        mainSolved: env.mainSolved,
        subtaskSolved: env.subtaskSolved,
        ended: env.ended,
        instructionUsed: state.instructionUsed || env.requestKind === "view-instruction",
        history,
        failure: null,
      };
    }
  }
}

export type ParsedAnswer =
  | { ok: true; value: number | null }
  | { ok: false; reason: string };

const NUMBER_SHAPE = /^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$/;

/** Read the answer box. Empty input is a deliberate "check with nothing
 * entered" (value null); a single decimal comma is accepted as a decimal
 * point; anything else that is not a plain number is rejected before it
 * can reach the server. */
export function parseAnswerInput(raw: string): ParsedAnswer {
  const trimmed = raw.trim();
  if (trimmed === "") {
    return { ok: true, value: null };
  }
  let text = trimmed;
  if (text.includes(",")) {
    const single = text.indexOf(",") === text.lastIndexOf(",");
    if (!single || text.includes(".")) {
      return { ok: false, reason: `cannot read "${trimmed}" as a number` };
    }
    text = text.replace(",", ".");
  }
  if (!NUMBER_SHAPE.test(text)) {
    return { ok: false, reason: `cannot read "${trimmed}" as a number` };
  }
  const value = Number(text);
  if (!Number.isFinite(value)) {
    return { ok: false, reason: `"${trimmed}" is out of range` };
  }
  return { ok: true, value };
}

/** Columns for the task table: x values on top, known y values below,
 * with the asked-for cell shown as "?". */
export function taskColumns(task: Task): Array<{ x: number; y: string }> {
  return task.x.map((x, i) => ({
    x,
    y: i < task.y.length ? String(task.y[i]) : "?",
  }));
}
