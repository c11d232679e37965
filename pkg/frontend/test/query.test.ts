import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { PatternMeta } from "../src/api.js";
import {
  buildQueryJson, buildQueryObject, canSubmit, emptyState, paginationLabel,
  selectPattern, setRangeOverride, setSelection, validateDosageText,
} from "../src/query.js";

const here = dirname(fileURLToPath(import.meta.url));
const GOLDEN = join(here, "..", "..", "tests", "golden", "scenario1_query.json");

const EPDI: PatternMeta = {
  id: "EPDI",
  classes: ["ENTITY", "PRONOUN", "DOSAGE", "INTERVAL"],
  gaps: [4, 4, 4],
};

function scenario1State() {
  let state = selectPattern(emptyState(), EPDI);
  state = setSelection(state, 0, { kind: "concept", value: "Buprenorphine" });
  state = setSelection(state, 1, { kind: "subnonterminal", value: "PERSONAL_PRONOUN" });
  state = setSelection(state, 2, { kind: "constraint", value: ">4mg" });
  state = setSelection(state, 3, { kind: "subnonterminal", value: "BY_DAY|BY_HOUR" });
  return state;
}

describe("query building", () => {
  it("emits the scenario-1 query byte-for-byte equal to the CLI golden file", () => {
    const golden = readFileSync(GOLDEN, "utf-8").trim();
    expect(buildQueryJson(scenario1State())).toBe(golden);
  });

  it("unselected slots search their whole class", () => {
    const state = selectPattern(emptyState(), EPDI);
    const obj = buildQueryObject(state) as { elements: { binding_kind: string; value: string }[] };
    expect(obj.elements.map((e) => e.binding_kind)).toEqual(["class", "class", "class", "class"]);
    expect(obj.elements[0].value).toBe("ENTITY");
  });

  it("range overrides appear only when set, padded with pattern defaults", () => {
    let state = scenario1State();
    expect(buildQueryObject(state)).not.toHaveProperty("ranges");
    state = setRangeOverride(state, 1, 2);
    expect((buildQueryObject(state) as { ranges: number[] }).ranges).toEqual([4, 2, 4]);
  });

  it("cannot submit without a pattern", () => {
    expect(canSubmit(emptyState())).toBe(false);
    expect(() => buildQueryJson(emptyState())).toThrow(/no pattern/);
  });

  it("cannot submit with an invalid dosage constraint", () => {
    let state = selectPattern(emptyState(), EPDI);
    state = setSelection(state, 2, { kind: "constraint", value: "4>mg" });
    expect(canSubmit(state)).toBe(false);
  });
});

describe("dosage constraint syntax check", () => {
  it("accepts operator + amount + unit forms", () => {
    for (const ok of [">4mg", ">= 10 mg", "<0.5 g", "ten milligrams", "more than thirty mg", "4mg"]) {
      expect(validateDosageText(ok), ok).toBeNull();
    }
  });

  it("rejects malformed text", () => {
    for (const bad of ["4>mg", "", "mg", ">four", "10 bananas"]) {
      expect(validateDosageText(bad), bad).not.toBeNull();
    }
  });
});

describe("pagination label", () => {
  it("matches the grid footer format", () => {
    expect(paginationLabel(1, 50, 21)).toBe("1 – 21 of 21");
    expect(paginationLabel(1, 50, 0)).toBe("0 – 0 of 0");
    expect(paginationLabel(2, 50, 120)).toBe("51 – 100 of 120");
    expect(paginationLabel(3, 50, 120)).toBe("101 – 120 of 120");
  });
});
