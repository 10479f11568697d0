/** DOM layer: builds the page once, then re-renders it from ViewState
 * after every reducer step. Buttons exist or are enabled strictly
 * according to the server's action set, so an honest user of this UI can
 * never produce an illegal request. */

import {
  ApiHttpError,
  NetworkError,
  TutorClient,
  type Envelope,
} from "./api.js";
import {
  INITIAL_STATE,
  parseAnswerInput,
  reduce,
  taskColumns,
  type ViewAction,
  type ViewState,
} from "./model.js";

export interface AppHandle {
  state(): ViewState;
  /** Resolves once no request is in flight; lets tests await a click. */
  whenIdle(): Promise<void>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

export function mountApp(root: HTMLElement, client: TutorClient): AppHandle {
  let state = INITIAL_STATE;
  let inFlight = 0;
  let idleWaiters: Array<() => void> = [];
  let retry: (() => void) | null = null;

  // --- static skeleton -------------------------------------------------
  const banner = el("div", { id: "banner", hidden: "" });
  const bannerText = el("span", { id: "banner-text" });
  const retryButton = el("button", { id: "retry-button", type: "button" }, "Retry");
  const dismissButton = el("button", { id: "dismiss-button", type: "button" }, "Dismiss");
  banner.append(bannerText, " ", retryButton, " ", dismissButton);

  const startSection = el("section", { id: "start" });
  const topicSelect = el("select", { id: "topic" });
  topicSelect.append(
    el("option", { value: "linear" }, "Linear growth"),
    el("option", { value: "exponential" }, "Exponential growth"),
  );
  const startButton = el("button", { id: "start-button", type: "button" }, "Start practicing");
  startSection.append(el("label", { for: "topic" }, "Topic: "), topicSelect, " ", startButton);

  const taskSection = el("section", { id: "task", hidden: "" });
  const contextLabel = el("h2", { id: "context-label" });
  const taskTable = el("table", { id: "task-table" });
  const questionLine = el("p", { id: "question" });
  const answerForm = el("form", { id: "answer-form" });
  const answerInput = el("input", {
    id: "answer-input",
    type: "text",
    autocomplete: "off",
    placeholder: "your answer",
  });
  const submitButton = el("button", { id: "submit-button", type: "button" }, "Check");
  answerForm.append(answerInput, " ", submitButton);
  const parseError = el("p", { id: "parse-error", hidden: "" });
  const solvedLine = el("p", { id: "solved-line", hidden: "" }, "Solved!");
  taskSection.append(contextLabel, taskTable, questionLine, answerForm, parseError, solvedLine);

  const feedbackSection = el("section", { id: "feedback" });

  const wePanel = el("section", { id: "we-panel", hidden: "" });
  const weSteps = el("ol", { id: "we-steps" });
  const weAnswer = el("p", { id: "we-answer" });
  wePanel.append(el("h3", {}, "Worked example"), weSteps, weAnswer);

  const videoPanel = el("section", { id: "video-panel", hidden: "" });
  const videoBody = el("p", { id: "video-body" });
  videoPanel.append(el("h3", {}, "Instruction"), videoBody);

  const nav = el("nav", { id: "actions" });
  const subtaskButton = el("button", { id: "subtask-button", type: "button" }, "Easier task");
  const instructionButton = el("button", { id: "instruction-button", type: "button" }, "Watch instruction");
  const weButton = el("button", { id: "we-button", type: "button" }, "Worked example");
  const returnButton = el("button", { id: "return-button", type: "button" }, "Back to the main task");
  const stuckButton = el("button", { id: "stuck-button", type: "button" }, "I cannot continue");
  const endButton = el("button", { id: "end-button", type: "button" }, "End session");
  nav.append(subtaskButton, instructionButton, weButton, returnButton, stuckButton, endButton);

  const historyList = el("ol", { id: "history" });
  const endedLine = el("p", { id: "ended-line", hidden: "" }, "Session ended.");

  root.append(banner, startSection, taskSection, feedbackSection, wePanel, videoPanel, nav, historyList, endedLine);

  // --- state plumbing --------------------------------------------------
  function dispatch(action: ViewAction): void {
    state = reduce(state, action);
    render();
  }

  function begin(): void {
    inFlight += 1;
  }

  function end(): void {
    inFlight -= 1;
    if (inFlight === 0) {
      const waiters = idleWaiters;
      idleWaiters = [];
      for (const wake of waiters) {
        wake();
      }
    }
  }

  function perform(
    label: string,
    call: () => Promise<Envelope>,
    submitted?: number | null,
  ): void {
    begin();
    call()
      .then((envelope) => {
        retry = null;
        if (envelope.requestKind === "submit-answer") {
          answerInput.value = "";
        }
        dispatch({ type: "envelope", envelope, submitted });
      })
      .catch((error: unknown) => {
        if (error instanceof NetworkError) {
          retry = () => perform(label, call, submitted);
          dispatch({ type: "network-failure", message: `${label} did not reach the server.` });
        } else if (error instanceof ApiHttpError) {
          retry = null;
          dispatch({ type: "network-failure", message: `${label} was rejected: ${error.message}` });
        } else {
          retry = null;
          dispatch({ type: "network-failure", message: `${label} failed: ${String(error)}` });
        }
      })
      .finally(end);
  }

  // --- wiring ----------------------------------------------------------
  startButton.addEventListener("click", () => {
    const topic = topicSelect.value;
    perform("Starting the session", () => client.createSession(topic));
  });

  function submitCurrentAnswer(): void {
    const parsed = parseAnswerInput(answerInput.value);
    if (!parsed.ok) {
      parseError.textContent = parsed.reason;
      parseError.hidden = false;
      return;
    }
    parseError.hidden = true;
    const id = state.sessionId;
    if (id === null || !state.actions.canSubmit) {
      return;
    }
    perform("Checking the answer", () => client.submitAnswer(id, parsed.value), parsed.value);
  }

  submitButton.addEventListener("click", submitCurrentAnswer);
  answerForm.addEventListener("submit", (event) => {
    // Enter in the answer box
    event.preventDefault();
    submitCurrentAnswer();
  });

  function navCall(label: string, call: (id: string) => Promise<Envelope>): void {
    const id = state.sessionId;
    if (id !== null) {
      perform(label, () => call(id));
    }
  }

  subtaskButton.addEventListener("click", () => navCall("Switching to the easier task", (id) => client.chooseSubtask(id)));
  instructionButton.addEventListener("click", () => navCall("Opening the instruction", (id) => client.viewInstruction(id)));
  weButton.addEventListener("click", () => navCall("Opening the worked example", (id) => client.viewWorkedExample(id)));
  returnButton.addEventListener("click", () => navCall("Returning to the main task", (id) => client.returnToMain(id)));
  stuckButton.addEventListener("click", () => navCall("Reporting being stuck", (id) => client.declareStuck(id)));
  endButton.addEventListener("click", () => navCall("Ending the session", (id) => client.closeSession(id)));

  retryButton.addEventListener("click", () => {
    const again = retry;
    retry = null;
    if (again !== null) {
      again();
    } else {
      dispatch({ type: "dismiss-failure" });
    }
  });
  dismissButton.addEventListener("click", () => {
    retry = null;
    dispatch({ type: "dismiss-failure" });
  });

  // --- rendering -------------------------------------------------------
  function renderTask(): void {
    const task = state.task;
    taskSection.hidden = task === null;
    if (task === null) {
      return;
    }
    contextLabel.textContent =
      state.context === "main" ? "Main task" : `Easier subtask (${task.kind})`;
    taskTable.textContent = "";
    const xRow = el("tr", { id: "x-row" });
    const yRow = el("tr", { id: "y-row" });
    xRow.append(el("th", {}, "x"));
    yRow.append(el("th", {}, "y"));
    for (const column of taskColumns(task)) {
      xRow.append(el("td", {}, String(column.x)));
      yRow.append(el("td", {}, column.y));
    }
    const tbody = el("tbody");
    tbody.append(xRow, yRow);
    taskTable.append(tbody);
    questionLine.textContent =
      task.givenRate !== null
        ? `${task.question} (rate given: ${task.givenRate})`
        : task.question;
    const solved = state.context === "main" ? state.mainSolved : state.subtaskSolved;
    solvedLine.hidden = !solved;
    submitButton.disabled = !state.actions.canSubmit;
    answerInput.disabled = !state.actions.canSubmit;
  }

  function renderFeedback(): void {
    feedbackSection.textContent = "";
    for (const message of state.feedback) {
      const badge = message.specificity === null
        ? message.type
        : `${message.type} · ${message.specificity}`;
      const item = el("div", { class: "feedback-item" });
      const tag = el("span", { class: "badge" }, badge);
      tag.dataset.type = message.type;
      if (message.specificity !== null) {
        tag.dataset.specificity = message.specificity;
      }
      item.append(tag, el("span", { class: "feedback-text" }, ` ${message.text}`));
      feedbackSection.append(item);
    }
  }

  function renderPanels(): void {
    wePanel.hidden = state.workedExample === null;
    if (state.workedExample !== null) {
      weSteps.textContent = "";
      for (const step of state.workedExample.steps) {
        weSteps.append(el("li", {}, step));
      }
      weAnswer.textContent = `Answer: ${state.workedExample.answer}`;
    }
    videoPanel.hidden = state.video === null;
    if (state.video !== null) {
      videoBody.textContent = state.video.placeholder
        ? `Video placeholder: ${state.video.video}`
        : state.video.video;
    }
  }

  function renderNav(): void {
    const active = state.sessionId !== null && !state.ended;
    subtaskButton.hidden = !state.actions.canSubtask;
    weButton.hidden = !state.actions.canViewWE;
    returnButton.hidden = !state.actions.canReturnToMain;
    stuckButton.hidden = !active;
    endButton.hidden = !active;
    if (state.instructionUsed) {
      instructionButton.remove(); // one-shot: gone for good
    } else {
      instructionButton.hidden = !state.actions.canViewDI;
    }
  }

  function renderHistory(): void {
    historyList.textContent = "";
    for (const attempt of state.history) {
      const shown = attempt.submitted === null ? "(nothing)" : String(attempt.submitted);
      const suffix = attempt.solved ? " — solved" : "";
      historyList.append(
        el("li", { class: "attempt" }, `[${attempt.context}] ${shown} → ${attempt.outcome}${suffix}`),
      );
    }
  }

  function render(): void {
    banner.hidden = state.failure === null;
    bannerText.textContent = state.failure ?? "";
    retryButton.hidden = retry === null;
    startSection.hidden = state.sessionId !== null;
    endedLine.hidden = !state.ended;
    renderTask();
    renderFeedback();
    renderPanels();
    renderNav();
    renderHistory();
  }

  render();

  return {
    state: () => state,
    whenIdle: () =>
      inFlight === 0
        ? Promise.resolve()
        : new Promise((resolve) => idleWaiters.push(resolve)),
  };
}
