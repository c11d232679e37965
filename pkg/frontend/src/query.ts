/**
 * Builder state and query construction. The emitted query JSON is the single
 * source of truth: the server validates and interprets it, the client never
 * applies search semantics of its own.
 */

import { canonicalJson, Json } from "./canonical.js";
import { PatternMeta } from "./api.js";

export type BindingKind = "class" | "concept" | "subnonterminal" | "constraint" | "terminal";

export interface Selection {
  kind: BindingKind;
  value: string;
}

export interface BuilderState {
  pattern: PatternMeta | null;
  selections: (Selection | null)[];
  rangeOverrides: (number | null)[];
  lastTrace: number[] | null;
  page: number;
  pageSize: number;
}

export function emptyState(): BuilderState {
  return { pattern: null, selections: [], rangeOverrides: [], lastTrace: null, page: 1, pageSize: 50 };
}

export function selectPattern(state: BuilderState, pattern: PatternMeta): BuilderState {
  return {
    ...state,
    pattern,
    selections: pattern.classes.map(() => null),
    rangeOverrides: pattern.gaps.map(() => null),
    lastTrace: null,
    page: 1,
  };
}

export function setSelection(state: BuilderState, position: number, selection: Selection | null): BuilderState {
  const selections = state.selections.slice();
  selections[position] = selection;
  return { ...state, selections };
}

export function setRangeOverride(state: BuilderState, gap: number, value: number | null): BuilderState {
  const rangeOverrides = state.rangeOverrides.slice();
  rangeOverrides[gap] = value;
  return { ...state, rangeOverrides };
}

/** A slot with no explicit choice searches its whole template class. */
export function buildQueryObject(state: BuilderState): Json {
  if (state.pattern === null) {
    throw new Error("no pattern selected");
  }
  const elements = state.pattern.classes.map((cls, i) => {
    const sel = state.selections[i];
    return {
      class: cls,
      binding_kind: sel ? sel.kind : "class",
      value: sel ? sel.value : cls,
    };
  });
  const query: { [key: string]: Json } = {
    pattern: state.pattern.id,
    elements: elements as unknown as Json,
  };
  if (state.rangeOverrides.some((r) => r !== null)) {
    query.ranges = state.rangeOverrides.map((r, i) =>
      r === null ? state.pattern!.gaps[i] : r,
    );
  }
  return query;
}

export function buildQueryJson(state: BuilderState): string {
  return canonicalJson(buildQueryObject(state));
}

export function canSubmit(state: BuilderState): boolean {
  if (state.pattern === null) {
    return false;
  }
  return state.pattern.classes.every((cls, i) => {
    const sel = state.selections[i];
    return sel === null || validateSelection(cls, sel) === null;
  });
}

export function validateSelection(cls: string, sel: Selection): string | null {
  if (sel.kind === "constraint" && cls === "DOSAGE") {
    return validateDosageText(sel.value);
  }
  if (!sel.value.trim()) {
    return "empty selection";
  }
  return null;
}

// digit amounts may abut the unit ("4mg"); worded amounts need a space
const DOSAGE_RE = /^\s*(>=|<=|=|>|<|~)?\s*((?:[0-9]+(?:\.[0-9]+)?)\s*|(?:[a-z]+\s+)+)(mg|mgs|milligrams?|milli-grams?|mcg|mcgs|micrograms?|ug|g|gm|gms|grams?|kg|kgs|kilograms?)\s*$/i;

/** Light client-side syntax check; the server remains the authority. */
export function validateDosageText(text: string): string | null {
  if (!text.trim()) {
    return "dosage constraint is empty";
  }
  if (!DOSAGE_RE.test(text)) {
    return "expected [operator] amount unit, e.g. \">4mg\"";
  }
  return null;
}

/** "1 – 21 of 21" style label for the results grid footer. */
export function paginationLabel(page: number, pageSize: number, total: number): string {
  if (total === 0) {
    return "0 – 0 of 0";
  }
  const first = (page - 1) * pageSize + 1;
  const last = Math.min(page * pageSize, total);
  return `${first} – ${last} of ${total}`;
}

export function pageCount(pageSize: number, total: number): number {
  return Math.max(1, Math.ceil(total / pageSize));
}
