import { ApiError, AssessmentClient, validateRequest } from "./api.js";
import { compareAttempts } from "./compare.js";
import { AttemptHistory, newAttemptId } from "./history.js";
import { clearError, renderAttempt, renderComparison, renderError } from "./render.js";
import type { AttemptRecord, Mode } from "./types.js";

export interface AppHandles {
  root: HTMLElement;
  setMode(mode: Mode): void;
  setTarget(text: string): void;
  setAudio(blob: Blob): void;
  submit(): Promise<AttemptRecord | null>;
  compareSelected(beforeIdx: number, afterIdx: number): void;
  getAttempts(): AttemptRecord[];
  elements: {
    modeSelect: HTMLSelectElement;
    targetInput: HTMLInputElement;
    targetRow: HTMLElement;
    fileInput: HTMLInputElement;
    submitButton: HTMLButtonElement;
    validation: HTMLElement;
    result: HTMLElement;
    errorArea: HTMLElement;
    historyList: HTMLElement;
    comparison: HTMLElement;
    healthBadge: HTMLElement;
  };
}

/** Build the single-page app inside `root`. One in-flight request at a time. */
export function createApp(
  root: HTMLElement,
  client: AssessmentClient,
  storage: Storage,
  now: () => number = Date.now,
): AppHandles {
  root.replaceChildren();
  root.innerHTML = `
    <header>
      <h1>MultiPA practice</h1>
      <span class="health-badge" data-role="health">checking…</span>
    </header>
    <section class="controls">
      <label>Mode
        <select data-role="mode">
          <option value="closed">closed (read a target sentence)</option>
          <option value="open">open (speak freely)</option>
        </select>
      </label>
      <label class="target-row" data-role="target-row">Target sentence
        <input type="text" data-role="target" placeholder="the sentence you will read" />
      </label>
      <label>Audio
        <input type="file" data-role="file" accept="audio/wav,audio/*" />
      </label>
      <button data-role="submit">Assess</button>
      <span class="validation" data-role="validation"></span>
    </section>
    <section class="error-area" data-role="error"></section>
    <section class="result" data-role="result"></section>
    <section class="comparison" data-role="comparison"></section>
    <section class="history">
      <h2>Attempts</h2>
      <ol data-role="history"></ol>
    </section>
  `;

  const q = <T extends HTMLElement>(sel: string) => root.querySelector(sel) as T;
  const elements = {
    modeSelect: q<HTMLSelectElement>('[data-role="mode"]'),
    targetInput: q<HTMLInputElement>('[data-role="target"]'),
    targetRow: q<HTMLElement>('[data-role="target-row"]'),
    fileInput: q<HTMLInputElement>('[data-role="file"]'),
    submitButton: q<HTMLButtonElement>('[data-role="submit"]'),
    validation: q<HTMLElement>('[data-role="validation"]'),
    result: q<HTMLElement>('[data-role="result"]'),
    errorArea: q<HTMLElement>('[data-role="error"]'),
    historyList: q<HTMLElement>('[data-role="history"]'),
    comparison: q<HTMLElement>('[data-role="comparison"]'),
    healthBadge: q<HTMLElement>('[data-role="health"]'),
  };

  const history = new AttemptHistory(storage);
  let attempts: AttemptRecord[] = history.load();
  let currentAudio: Blob | null = null;
  let inFlight = false;

  function refreshHistory(): void {
    elements.historyList.replaceChildren();
    attempts.forEach((attempt, i) => {
      const item = document.createElement("li");
      item.dataset.index = String(i);
      const total = attempt.response.sentence["total"];
      item.textContent =
        `#${i + 1} ${attempt.mode} ` +
        (total !== undefined ? `total ${total.toFixed(1)} ` : "") +
        new Date(attempt.timestamp).toLocaleTimeString();
      elements.historyList.appendChild(item);
    });
  }

  function syncModeVisibility(): void {
    const mode = elements.modeSelect.value as Mode;
    elements.targetRow.style.display = mode === "closed" ? "" : "none";
    if (mode === "open") elements.targetInput.value = "";
  }

  elements.modeSelect.addEventListener("change", syncModeVisibility);
  elements.fileInput.addEventListener("change", () => {
    const file = elements.fileInput.files?.[0];
    if (file) currentAudio = file;
  });
  elements.submitButton.addEventListener("click", () => void submit());

  client
    .health()
    .then((h) => (elements.healthBadge.textContent = h.status === "ok" ? "service ready" : "service loading"))
    .catch(() => (elements.healthBadge.textContent = "service unreachable"));

  async function submit(): Promise<AttemptRecord | null> {
    if (inFlight) return null;
    elements.validation.textContent = "";
    clearError(elements.errorArea);

    const mode = elements.modeSelect.value as Mode;
    const targetText = mode === "closed" ? elements.targetInput.value : "";
    // request invariants are enforced before anything leaves the browser
    const problem = validateRequest(mode, targetText);
    if (problem) {
      elements.validation.textContent = problem;
      return null;
    }
    if (!currentAudio) {
      elements.validation.textContent = "Record or choose an audio file first.";
      return null;
    }

    inFlight = true;
    elements.submitButton.disabled = true;
    try {
      const response = await client.assess(currentAudio, mode, targetText || undefined);
      const timestamp = now();
      const attempt: AttemptRecord = {
        id: newAttemptId(timestamp),
        timestamp,
        mode,
        targetText: mode === "closed" ? targetText : undefined,
        response,
        audioRef: typeof URL.createObjectURL === "function" ? URL.createObjectURL(currentAudio) : undefined,
      };
      attempts = history.append(attempt);
      renderAttempt(elements.result, attempt);
      refreshHistory();
      return attempt;
    } catch (err) {
      const message = err instanceof ApiError ? err.message : `request failed: ${String(err)}`;
      renderError(elements.errorArea, message, () => void submit());
      return null;
    } finally {
      inFlight = false;
      elements.submitButton.disabled = false;
    }
  }

  function compareSelected(beforeIdx: number, afterIdx: number): void {
    const before = attempts[beforeIdx];
    const after = attempts[afterIdx];
    if (!before || !after) return;
    renderComparison(elements.comparison, compareAttempts(before, after));
  }

  syncModeVisibility();
  refreshHistory();

  return {
    root,
    elements,
    setMode(mode: Mode) {
      elements.modeSelect.value = mode;
      syncModeVisibility();
    },
    setTarget(text: string) {
      elements.targetInput.value = text;
    },
    setAudio(blob: Blob) {
      currentAudio = blob;
    },
    submit,
    compareSelected,
    getAttempts: () => attempts,
  };
}
