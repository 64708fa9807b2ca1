import { fetchNext, postVerdict } from "./api.js";
import {
  codePointLength,
  codePointToUtf16,
  rangeToSpan,
  trimSpan,
} from "./offsets.js";
import type { SpanSelection, TextishNode } from "./offsets.js";
import { ReviewQueue } from "./review.js";
import type { QueueState } from "./review.js";
import type { VerdictPayload } from "./types.js";

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
};

const queue = new ReviewQueue({
  next: fetchNext,
  submit: postVerdict,
});

let currentContext = "";
let currentSelection: SpanSelection | null = null;

const contextEl = el<HTMLDivElement>("context");
const selectionPreview = el<HTMLDivElement>("selection-preview");
const banner = el<HTMLDivElement>("banner");
const correctButton = el<HTMLButtonElement>("correct");

type HighlightRegistryLike = {
  set(name: string, highlight: unknown): void;
  delete(name: string): void;
};
type HighlightCtorLike = new (...ranges: Range[]) => unknown;

const highlightRegistry = (): HighlightRegistryLike | null => {
  const css = CSS as unknown as { highlights?: HighlightRegistryLike };
  return css.highlights ?? null;
};

/**
 * Render the context and mark the candidate span. Preferred path keeps the
 * context a single text node and paints via the CSS custom-highlight API;
 * the fallback wraps the span in a <mark>, which the offset walker still
 * maps correctly.
 */
const renderContext = (context: string, start: number, length: number): void => {
  const startU = codePointToUtf16(context, start);
  const endU = codePointToUtf16(context, start + length);
  contextEl.textContent = context;
  const registry = highlightRegistry();
  const ctor = (globalThis as Record<string, unknown>)["Highlight"] as
    | HighlightCtorLike
    | undefined;
  if (length > 0 && registry && ctor && contextEl.firstChild) {
    const range = document.createRange();
    range.setStart(contextEl.firstChild, startU);
    range.setEnd(contextEl.firstChild, endU);
    registry.set("candidate", new ctor(range));
    return;
  }
  registry?.delete("candidate");
  if (length > 0) {
    const mark = document.createElement("mark");
    mark.textContent = context.slice(startU, endU);
    contextEl.textContent = "";
    contextEl.append(
      document.createTextNode(context.slice(0, startU)),
      mark,
      document.createTextNode(context.slice(endU))
    );
  }
};

const showSelection = (): void => {
  if (currentSelection) {
    selectionPreview.textContent =
      `selection: “${currentSelection.text}” @ ${currentSelection.start}`;
    correctButton.disabled = false;
  } else {
    selectionPreview.textContent =
      "select a span in the context to submit a correction";
    correctButton.disabled = true;
  }
};

const captureSelection = (): void => {
  const selection = document.getSelection();
  currentSelection = null;
  if (selection && selection.rangeCount > 0 && !selection.isCollapsed) {
    const range = selection.getRangeAt(0);
    const span = rangeToSpan(
      contextEl as unknown as TextishNode,
      currentContext,
      range as unknown as {
        startContainer: TextishNode;
        startOffset: number;
        endContainer: TextishNode;
        endOffset: number;
      }
    );
    currentSelection = span ? trimSpan(span) : null;
    if (span && !currentSelection) {
      selectionPreview.textContent = "selection is empty after trimming";
    }
    if (!span) {
      selectionPreview.textContent =
        "selection must stay inside the context text";
      correctButton.disabled = true;
      return;
    }
  }
  showSelection();
};

const render = (state: QueueState): void => {
  el("loading").hidden = state.phase !== "loading";
  el("reviewer-panel").hidden = state.phase !== "reviewing";
  el("done-panel").hidden = state.phase !== "done";

  banner.hidden = !state.errorMessage && !state.rejection;
  el("retry").hidden = !state.hasPendingVerdict && state.phase !== "error";
  if (state.rejection) {
    banner.textContent =
      `span rejected by the server: expected “${state.rejection.expected}” ` +
      `at ${state.rejection.start}, found “${state.rejection.actual}”`;
  } else if (state.errorMessage) {
    banner.textContent = state.errorMessage;
  }

  if (state.progress) {
    const { reviewed, total } = state.progress;
    el("progress-text").textContent = `${reviewed} / ${total} reviewed`;
    el<HTMLDivElement>("progress-fill").style.width =
      total > 0 ? `${(100 * reviewed) / total}%` : "0";
  }

  if (state.phase === "reviewing" && state.example) {
    const example = state.example;
    currentContext = example.context;
    currentSelection = null;
    el("item-position").textContent = `item ${example.index + 1} of ${example.total}`;
    el("title").textContent = example.title;
    el("question").textContent = example.question;
    const scoreNote =
      typeof example.score === "number"
        ? ` (similarity ${example.score.toFixed(3)})`
        : "";
    el("answer-meta").textContent = example.is_impossible
      ? `marked unanswerable${scoreNote}`
      : `candidate answer @ ${example.answer_start}${scoreNote}`;
    el("answer-text").textContent = example.answer_text || "(no answer)";
    renderContext(
      example.context,
      example.answer_start,
      codePointLength(example.answer_text)
    );
    showSelection();
  }

  if (state.phase === "done") {
    const counts = state.doneCounts;
    el("done-summary").textContent = counts
      ? `${counts.reviewed} of ${counts.total} items reviewed.`
      : "all items reviewed.";
  }
};

const submit = async (verdict: VerdictPayload): Promise<void> => {
  const reviewer = el<HTMLInputElement>("reviewer").value.trim();
  if (reviewer) {
    verdict.reviewer = reviewer;
  }
  render(await queue.submit(verdict));
};

const submitCorrection = (): void => {
  if (!currentSelection) {
    return;
  }
  // same slice check the server runs, before anything leaves the browser
  const { text, start } = currentSelection;
  const startU = codePointToUtf16(currentContext, start);
  if (currentContext.slice(startU, startU + text.length) !== text) {
    selectionPreview.textContent = "selection no longer matches the context";
    return;
  }
  void submit({ decision: "corrected", corrected_text: text, corrected_start: start });
};

const wire = (): void => {
  el("accept").addEventListener("click", () => void submit({ decision: "accept" }));
  el("reject").addEventListener("click", () => void submit({ decision: "reject" }));
  correctButton.addEventListener("click", submitCorrection);
  el("retry").addEventListener("click", () => void queue.retry().then(render));
  contextEl.addEventListener("mouseup", captureSelection);
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement || event.ctrlKey || event.metaKey) {
      return;
    }
    if (queue.state.phase !== "reviewing") {
      return;
    }
    if (event.key === "a") {
      void submit({ decision: "accept" });
    } else if (event.key === "r") {
      void submit({ decision: "reject" });
    } else if (event.key === "e") {
      captureSelection();
      submitCorrection();
    }
  });
};

wire();
void queue.load().then(render);
