/** Rating form state: four 1..5 judgments, all required before publishing. */

import type { Ratings } from "./api.js";

export const RATING_KEYS = ["relevance", "fluency", "coherence", "likability"] as const;

export type RatingKey = (typeof RATING_KEYS)[number];

export type RatingDraft = Record<RatingKey, number | null>;

export function emptyRatings(): RatingDraft {
  return { relevance: null, fluency: null, coherence: null, likability: null };
}

export function setRating(draft: RatingDraft, key: RatingKey, value: number): RatingDraft {
  if (!Number.isInteger(value) || value < 1 || value > 5) {
    throw new RangeError(`rating ${key} must be an integer in 1..5, got ${value}`);
  }
  return { ...draft, [key]: value };
}

export function isComplete(draft: RatingDraft): draft is Ratings {
  return RATING_KEYS.every((key) => draft[key] !== null);
}
