import type { AssessedWord, AttemptRecord, WordScores } from "./types.js";

export interface WordPairDelta {
  before: AssessedWord | null; // null = new word with no counterpart
  after: AssessedWord | null; // null = word that disappeared
  delta: WordScores | null; // null when unpaired
}

export interface AttemptComparison {
  sentenceDeltas: Record<string, number>;
  completenessDelta: number | null;
  words: WordPairDelta[];
  unpairedBefore: number;
  unpairedAfter: number;
}

function overlap(a: AssessedWord, b: AssessedWord): number {
  if (a.start === undefined || a.end === undefined) return 0;
  if (b.start === undefined || b.end === undefined) return 0;
  return Math.min(a.end, b.end) - Math.max(a.start, b.start);
}

/**
 * Pair words of two attempts by time-span overlap (word counts may differ
 * across open-mode attempts).  Each "after" word takes its best-overlapping
 * "before" word; leftovers on either side are flagged, never guessed.
 */
export function compareAttempts(before: AttemptRecord, after: AttemptRecord): AttemptComparison {
  const sentenceDeltas: Record<string, number> = {};
  for (const dim of Object.keys(after.response.sentence)) {
    const prev = before.response.sentence[dim];
    const next = after.response.sentence[dim];
    if (prev !== undefined && next !== undefined) {
      sentenceDeltas[dim] = next - prev;
    }
  }
  const completenessDelta =
    before.response.completeness !== null && after.response.completeness !== null
      ? after.response.completeness - before.response.completeness
      : null;

  const beforeWords = before.response.words;
  const taken = new Set<number>();
  const words: WordPairDelta[] = [];
  for (const afterWord of after.response.words) {
    let bestIdx = -1;
    let bestOverlap = 0;
    beforeWords.forEach((candidate, i) => {
      const o = overlap(candidate, afterWord);
      if (o > bestOverlap) {
        bestOverlap = o;
        bestIdx = i;
      }
    });
    if (bestIdx >= 0) {
      taken.add(bestIdx);
      const b = beforeWords[bestIdx]!;
      words.push({
        before: b,
        after: afterWord,
        delta: {
          accuracy: afterWord.scores.accuracy - b.scores.accuracy,
          stress: afterWord.scores.stress - b.scores.stress,
          total: afterWord.scores.total - b.scores.total,
        },
      });
    } else {
      words.push({ before: null, after: afterWord, delta: null });
    }
  }
  beforeWords.forEach((w, i) => {
    if (!taken.has(i)) words.push({ before: w, after: null, delta: null });
  });

  return {
    sentenceDeltas,
    completenessDelta,
    words,
    unpairedBefore: words.filter((w) => w.after === null).length,
    unpairedAfter: words.filter((w) => w.before === null).length,
  };
}
