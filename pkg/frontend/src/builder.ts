/**
 * Template query builder: one slot per class of the selected pattern, each
 * populated from the class options endpoint, never hardcoded.
 */

import { ApiClient, ClassOptions, ConceptMeta, PatternMeta } from "./api.js";
import {
  BuilderState, Selection, canSubmit, selectPattern, setRangeOverride, setSelection,
  validateDosageText,
} from "./query.js";

export interface BuilderCallbacks {
  onChange(state: BuilderState): void;
  onSubmit(state: BuilderState): void;
}

export class BuilderView {
  private optionsCache = new Map<string, ClassOptions>();
  private state: BuilderState;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private patterns: PatternMeta[],
    state: BuilderState,
    private callbacks: BuilderCallbacks,
  ) {
    this.state = state;
  }

  current(): BuilderState {
    return this.state;
  }

  private update(state: BuilderState): void {
    this.state = state;
    this.callbacks.onChange(state);
    void this.render();
  }

  async render(): Promise<void> {
    this.root.replaceChildren();
    const title = document.createElement("h2");
    title.textContent = "Template Query Builder";
    this.root.appendChild(title);

    const patternRow = document.createElement("div");
    patternRow.className = "slot";
    const label = document.createElement("label");
    label.textContent = "Template pattern";
    const select = document.createElement("select");
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "choose a pattern";
    select.appendChild(blank);
    for (const p of this.patterns) {
      const opt = document.createElement("option");
      opt.value = p.id;
      opt.textContent = `${p.id}: ${p.classes.join(" ")}`;
      opt.selected = this.state.pattern?.id === p.id;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => {
      const chosen = this.patterns.find((p) => p.id === select.value);
      if (chosen) {
        this.update(selectPattern(this.state, chosen));
      }
    });
    patternRow.append(label, select);
    this.root.appendChild(patternRow);

    if (this.state.pattern) {
      for (let i = 0; i < this.state.pattern.classes.length; i++) {
        this.root.appendChild(await this.renderSlot(i));
      }
      this.root.appendChild(this.renderRanges());
    }

    const submit = document.createElement("button");
    submit.textContent = "Submit";
    submit.disabled = !canSubmit(this.state);
    submit.addEventListener("click", () => this.callbacks.onSubmit(this.state));
    this.root.appendChild(submit);
  }

  private async options(cls: string): Promise<ClassOptions> {
    const cached = this.optionsCache.get(cls);
    if (cached) {
      return cached;
    }
    const fetched = await this.api.classOptions(cls);
    this.optionsCache.set(cls, fetched);
    return fetched;
  }

  private async renderSlot(position: number): Promise<HTMLElement> {
    const cls = this.state.pattern!.classes[position];
    const slot = document.createElement("div");
    slot.className = "slot";
    const label = document.createElement("label");
    label.textContent = cls;
    slot.appendChild(label);
    const options = await this.options(cls);
    if (options.source === "ontology" && options.concepts) {
      slot.appendChild(this.conceptPicker(position, options.concepts));
    } else if (cls === "DOSAGE") {
      slot.appendChild(this.dosageInputs(position, options));
    } else if (options.subcategories && options.subcategories.length) {
      slot.appendChild(this.subcategoryPicker(position, options.subcategories));
    }
    return slot;
  }

  /** Concept tree flattened with depth markers, childmost entries indented. */
  private conceptPicker(position: number, concepts: ConceptMeta[]): HTMLElement {
    const byParent = new Map<string | null, ConceptMeta[]>();
    for (const c of concepts) {
      const list = byParent.get(c.parent) ?? [];
      list.push(c);
      byParent.set(c.parent, list);
    }
    const select = document.createElement("select");
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = `any ${this.state.pattern!.classes[position]}`;
    select.appendChild(blank);
    const walk = (parent: string | null, depth: number) => {
      for (const c of byParent.get(parent) ?? []) {
        const opt = document.createElement("option");
        opt.value = c.id;
        opt.textContent = `${"  ".repeat(depth)}${c.label}`;
        opt.selected = this.state.selections[position]?.value === c.id;
        select.appendChild(opt);
        walk(c.id, depth + 1);
      }
    };
    walk(null, 0);
    select.addEventListener("change", () => {
      const sel: Selection | null = select.value
        ? { kind: "concept", value: select.value }
        : null;
      this.update(setSelection(this.state, position, sel));
    });
    return select;
  }

  private subcategoryPicker(position: number, subcategories: string[]): HTMLElement {
    const box = document.createElement("div");
    box.className = "subcats";
    const chosen = new Set(
      (this.state.selections[position]?.value ?? "").split("|").filter(Boolean),
    );
    for (const sub of subcategories) {
      const wrap = document.createElement("label");
      wrap.className = "subcat";
      const check = document.createElement("input");
      check.type = "checkbox";
      check.value = sub;
      check.checked = chosen.has(sub);
      check.addEventListener("change", () => {
        if (check.checked) {
          chosen.add(sub);
        } else {
          chosen.delete(sub);
        }
        const value = subcategories.filter((s) => chosen.has(s)).join("|");
        const sel: Selection | null = value ? { kind: "subnonterminal", value } : null;
        this.update(setSelection(this.state, position, sel));
      });
      wrap.append(check, document.createTextNode(sub));
      box.appendChild(wrap);
    }
    return box;
  }

  private dosageInputs(position: number, options: ClassOptions): HTMLElement {
    const box = document.createElement("div");
    box.className = "dosage";
    const op = document.createElement("select");
    for (const symbol of (options.operators ?? []).map((o) => o.symbol)) {
      const opt = document.createElement("option");
      opt.value = symbol;
      opt.textContent = symbol;
      op.appendChild(opt);
    }
    const amount = document.createElement("input");
    amount.type = "text";
    amount.placeholder = "amount";
    const unit = document.createElement("select");
    for (const u of options.units ?? []) {
      const opt = document.createElement("option");
      opt.value = u;
      opt.textContent = u;
      unit.appendChild(opt);
    }
    const error = document.createElement("span");
    error.className = "error";
    const current = this.state.selections[position];
    if (current?.kind === "constraint") {
      const m = current.value.match(/^(>=|<=|=|>|<)?(.*?)([a-z]+)$/i);
      if (m) {
        op.value = m[1] ?? ">";
        amount.value = m[2].trim();
        unit.value = m[3];
      }
    }
    const apply = () => {
      if (!amount.value.trim()) {
        error.textContent = "";
        this.update(setSelection(this.state, position, null));
        return;
      }
      const text = `${op.value}${amount.value.trim()}${unit.value}`;
      const problem = validateDosageText(text);
      error.textContent = problem ?? "";
      const sel: Selection = { kind: "constraint", value: text };
      this.update(setSelection(this.state, position, problem ? null : sel));
    };
    op.addEventListener("change", apply);
    amount.addEventListener("change", apply);
    unit.addEventListener("change", apply);
    box.append(op, amount, unit, error);
    return box;
  }

  private renderRanges(): HTMLElement {
    const box = document.createElement("details");
    box.className = "ranges";
    const summary = document.createElement("summary");
    summary.textContent = "token windows (advanced)";
    box.appendChild(summary);
    this.state.pattern!.gaps.forEach((gap, i) => {
      const input = document.createElement("input");
      input.type = "number";
      input.min = "0";
      input.value = String(this.state.rangeOverrides[i] ?? gap);
      input.addEventListener("change", () => {
        const parsed = input.value === "" ? null : Number(input.value);
        this.update(setRangeOverride(this.state, i, parsed === gap ? null : parsed));
      });
      const label = document.createElement("label");
      label.textContent = `gap ${i + 1} max`;
      label.appendChild(input);
      box.appendChild(label);
    });
    return box;
  }
}
