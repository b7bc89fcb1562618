// Wire types for the assessment service (POST /v1/assess).

export type Mode = "closed" | "open";

export interface WordScores {
  accuracy: number;
  stress: number;
  total: number;
}

export interface AssessedWord {
  scores: WordScores;
  text?: string;
  start?: number;
  end?: number;
}

export type Range = [number, number];

export interface ScoreRanges {
  sentence: Record<string, Range>;
  word: Record<string, Range>;
}

export interface AssessmentResponse {
  mode: Mode;
  sentence: Record<string, number>;
  completeness: number | null;
  words: AssessedWord[];
  transcripts: { keyed: string[]; perceived: string[] };
  score_ranges: ScoreRanges;
}

export interface AttemptRecord {
  id: string;
  timestamp: number;
  mode: Mode;
  targetText?: string;
  response: AssessmentResponse;
  // object URL for in-session replay; not persisted across reloads
  audioRef?: string;
}
