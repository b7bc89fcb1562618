import type { AttemptComparison } from "./compare.js";
import type { AssessmentResponse, AttemptRecord, Range } from "./types.js";

export type Band = "low" | "mid" | "high";

/** Three equal bands over the service-declared score range. */
export function colorBand(value: number, range: Range): Band {
  const [lo, hi] = range;
  const t = hi > lo ? (value - lo) / (hi - lo) : 0;
  if (t < 1 / 3) return "low";
  if (t < 2 / 3) return "mid";
  return "high";
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * Render one attempt: sentence panel, optional completeness, word chips.
 * Values come straight from the response; nothing is recomputed here.
 */
export function renderAttempt(container: HTMLElement, attempt: AttemptRecord): void {
  container.replaceChildren();
  const response = attempt.response;

  const sentencePanel = el("div", "sentence-scores");
  for (const [dim, value] of Object.entries(response.sentence)) {
    const range = response.score_ranges.sentence[dim] ?? [0, 10];
    const chip = el("span", `score-chip score-${colorBand(value, range)}`, `${dim} ${value.toFixed(1)}`);
    chip.dataset.field = dim;
    sentencePanel.appendChild(chip);
  }
  if (response.completeness !== null) {
    const range = response.score_ranges.sentence["completeness"] ?? [0, 10];
    const chip = el(
      "span",
      `score-chip score-${colorBand(response.completeness, range)}`,
      `completeness ${response.completeness.toFixed(1)}`,
    );
    chip.dataset.field = "completeness";
    sentencePanel.appendChild(chip);
  }
  container.appendChild(sentencePanel);

  const wordsPanel = el("div", "word-chips");
  const totalRange = response.score_ranges.word["total"] ?? [0, 10];
  response.words.forEach((word, i) => {
    const label = word.text ?? response.transcripts.keyed[i] ?? `word ${i + 1}`;
    const chip = el("span", `word-chip score-${colorBand(word.scores.total, totalRange)}`, label);
    const span =
      word.start !== undefined && word.end !== undefined
        ? ` @ ${word.start.toFixed(2)}-${word.end.toFixed(2)}s`
        : "";
    chip.title =
      `accuracy ${word.scores.accuracy.toFixed(1)}, ` +
      `stress ${word.scores.stress.toFixed(1)}, ` +
      `total ${word.scores.total.toFixed(1)}${span}`;
    wordsPanel.appendChild(chip);
  });
  container.appendChild(wordsPanel);

  const meta = el(
    "div",
    "attempt-meta",
    `${response.mode} · ${new Date(attempt.timestamp).toLocaleTimeString()}` +
      (attempt.targetText ? ` · “${attempt.targetText}”` : ""),
  );
  container.appendChild(meta);
}

export function renderComparison(container: HTMLElement, cmp: AttemptComparison): void {
  container.replaceChildren();
  const sentencePanel = el("div", "sentence-deltas");
  const entries: [string, number][] = Object.entries(cmp.sentenceDeltas);
  if (cmp.completenessDelta !== null) entries.push(["completeness", cmp.completenessDelta]);
  for (const [dim, delta] of entries) {
    const cls = delta > 0 ? "delta-up" : delta < 0 ? "delta-down" : "delta-flat";
    const chip = el("span", `score-chip ${cls}`, `${dim} ${delta >= 0 ? "+" : ""}${delta.toFixed(1)}`);
    chip.dataset.field = `delta-${dim}`;
    sentencePanel.appendChild(chip);
  }
  container.appendChild(sentencePanel);

  const wordsPanel = el("div", "word-deltas");
  for (const pair of cmp.words) {
    const label = pair.after?.text ?? pair.before?.text ?? "?";
    if (pair.delta === null) {
      const chip = el("span", "word-chip unpaired", `${label} (unpaired)`);
      wordsPanel.appendChild(chip);
    } else {
      const d = pair.delta.total;
      const cls = d > 0 ? "delta-up" : d < 0 ? "delta-down" : "delta-flat";
      wordsPanel.appendChild(
        el("span", `word-chip ${cls}`, `${label} ${d >= 0 ? "+" : ""}${d.toFixed(1)}`),
      );
    }
  }
  container.appendChild(wordsPanel);
}

export function renderError(container: HTMLElement, message: string, onRetry: () => void): void {
  container.replaceChildren();
  const box = el("div", "error-box");
  box.appendChild(el("span", "error-message", message));
  const retry = el("button", "retry-button", "Retry");
  retry.addEventListener("click", onRetry);
  box.appendChild(retry);
  container.appendChild(box);
}

export function clearError(container: HTMLElement): void {
  container.replaceChildren();
}
