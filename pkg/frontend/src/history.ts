import type { AttemptRecord } from "./types.js";

const STORAGE_KEY = "multipa.attempts.v1";

/** Attempt history lives in the browser only, ordered by time. */
export class AttemptHistory {
  constructor(private storage: Storage) {}

  load(): AttemptRecord[] {
    const raw = this.storage.getItem(STORAGE_KEY);
    if (!raw) return [];
    try {
      const parsed = JSON.parse(raw) as AttemptRecord[];
      return parsed.sort((a, b) => a.timestamp - b.timestamp);
    } catch {
      return [];
    }
  }

  append(record: AttemptRecord): AttemptRecord[] {
    const all = [...this.load(), record].sort((a, b) => a.timestamp - b.timestamp);
    // audio object URLs are session-local; strip before persisting
    const persistable = all.map(({ audioRef: _audioRef, ...rest }) => rest);
    this.storage.setItem(STORAGE_KEY, JSON.stringify(persistable));
    return all;
  }

  clear(): void {
    this.storage.removeItem(STORAGE_KEY);
  }
}

let counter = 0;

export function newAttemptId(now: number): string {
  counter += 1;
  return `attempt-${now}-${counter}`;
}
