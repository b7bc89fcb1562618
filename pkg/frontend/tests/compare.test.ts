import { describe, expect, it } from "vitest";

import { compareAttempts } from "../src/compare.js";
import type { AssessmentResponse, AttemptRecord } from "../src/types.js";
import openFixture from "./fixtures/open.json";

const base = openFixture as unknown as AssessmentResponse;

function attempt(response: AssessmentResponse, timestamp = 0): AttemptRecord {
  return { id: `a${timestamp}`, timestamp, mode: response.mode, response };
}

function clone(): AssessmentResponse {
  return JSON.parse(JSON.stringify(base)) as AssessmentResponse;
}

describe("compareAttempts", () => {
  it("identical responses give all-zero deltas", () => {
    const cmp = compareAttempts(attempt(clone(), 1), attempt(clone(), 2));
    for (const delta of Object.values(cmp.sentenceDeltas)) expect(delta).toBe(0);
    expect(cmp.unpairedBefore).toBe(0);
    expect(cmp.unpairedAfter).toBe(0);
    for (const pair of cmp.words) {
      expect(pair.delta).not.toBeNull();
      expect(pair.delta!.total).toBe(0);
    }
  });

  it("uniformly higher sentence scores give all-positive deltas", () => {
    const better = clone();
    for (const dim of Object.keys(better.sentence)) better.sentence[dim]! += 0.5;
    const cmp = compareAttempts(attempt(clone(), 1), attempt(better, 2));
    const dims = Object.keys(cmp.sentenceDeltas);
    expect(dims.length).toBeGreaterThan(0);
    for (const dim of dims) expect(cmp.sentenceDeltas[dim]).toBeCloseTo(0.5, 10);
  });

  it("pairs differing word counts by time overlap and flags the unpaired", () => {
    const after = clone();
    // the recognizer heard one extra word in a silent gap: no counterpart
    after.words = [
      ...after.words,
      { scores: { accuracy: 5, stress: 5, total: 5 }, text: "extra", start: 98.0, end: 98.3 },
    ];
    const cmp = compareAttempts(attempt(clone(), 1), attempt(after, 2));
    const unpaired = cmp.words.filter((w) => w.delta === null);
    expect(unpaired.length).toBe(1);
    expect(unpaired[0]!.after!.text).toBe("extra");
    expect(cmp.unpairedAfter).toBe(1);
    // every original word still pairs with itself through its span
    expect(cmp.words.filter((w) => w.delta !== null).length).toBe(base.words.length);
  });

  it("flags words that disappeared between attempts", () => {
    const after = clone();
    after.words = after.words.slice(0, -1);
    const cmp = compareAttempts(attempt(clone(), 1), attempt(after, 2));
    expect(cmp.unpairedBefore).toBe(1);
    const gone = cmp.words.find((w) => w.after === null);
    expect(gone).toBeDefined();
    expect(gone!.before!.text).toBe(base.words[base.words.length - 1]!.text);
  });

  it("completeness delta only when both attempts carry it", () => {
    const cmp = compareAttempts(attempt(clone(), 1), attempt(clone(), 2));
    expect(cmp.completenessDelta).toBeNull(); // open mode has no completeness
  });
});
