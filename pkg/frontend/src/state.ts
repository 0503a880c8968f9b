/**
 * View state and form logic, kept free of DOM and network concerns so the
 * invariants (selection always in the tree, submit only when every required
 * slot is valid) are directly testable.
 */

import type {
  BindingValue,
  SlotSpec,
  StatementForm,
  TermSuggestion,
  TreeNode,
  TreePayload,
} from "./api.js";

export interface TreeViewState {
  entry: string | null;
  expanded: Set<string>;
  selected: string | null;
}

export function emptyTreeState(): TreeViewState {
  return { entry: null, expanded: new Set(), selected: null };
}

/** Selection must name a node of the current payload; stale ids fall back to the root. */
export function reconcileSelection(state: TreeViewState, tree: TreePayload): TreeViewState {
  const items = new Set(tree.nodes.map((n) => n.item));
  const selected = state.selected && items.has(state.selected) ? state.selected : tree.root;
  const expanded = new Set([...state.expanded].filter((item) => items.has(item)));
  return { entry: state.entry, expanded, selected };
}

export interface TreeRow {
  node: TreeNode;
  depth: number;
}

/** Depth-first rows for rendering: root first, children under their parent. */
export function treeRows(tree: TreePayload): TreeRow[] {
  const children = new Map<string | null, TreeNode[]>();
  for (const node of tree.nodes) {
    const list = children.get(node.parent) ?? [];
    list.push(node);
    children.set(node.parent, list);
  }
  const rows: TreeRow[] = [];
  const visit = (parent: string | null, depth: number) => {
    for (const node of children.get(parent) ?? []) {
      rows.push({ node, depth });
      visit(node.item, depth + 1);
    }
  };
  visit(null, 0);
  return rows;
}

export type FieldKind = "term" | "numeric" | "text";

export interface FieldState {
  spec: SlotSpec;
  kind: FieldKind;
  value: string;
  iri: string | null;
  suggestions: TermSuggestion[];
  touched: boolean;
}

export interface FormModel {
  classLabel: string;
  description: string;
  fields: FieldState[];
}

function fieldKind(spec: SlotSpec): FieldKind {
  if (spec.input_mode === "ontology-term") return "term";
  if (spec.input_mode === "numeric") return "numeric";
  return "text";
}

/** Subject slots are bound server-side from the posting unit, so forms skip them. */
export function buildForm(form: StatementForm): FormModel {
  return {
    classLabel: form.class,
    description: form.description,
    fields: form.slots
      .filter((spec) => spec.role !== "subject")
      .map((spec) => ({
        spec,
        kind: fieldKind(spec),
        value: "",
        iri: null,
        suggestions: [],
        touched: false,
      })),
  };
}

const DECIMAL_RE = /^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$/;

export function fieldError(field: FieldState): string | null {
  const value = field.value.trim();
  if (value === "" && field.iri === null) {
    return field.spec.required ? "required" : null;
  }
  if (field.kind === "term" && field.iri === null) {
    return "pick a term from the suggestions";
  }
  if (field.kind === "numeric" && !DECIMAL_RE.test(value)) {
    return "not a number";
  }
  return null;
}

export function formValid(model: FormModel): boolean {
  return model.fields.every((field) => fieldError(field) === null);
}

/** Server-bound value per filled field; empty optional fields are omitted. */
export function formBindings(model: FormModel): Record<string, BindingValue> {
  const bindings: Record<string, BindingValue> = {};
  for (const field of model.fields) {
    if (field.kind === "term") {
      if (field.iri !== null) bindings[field.spec.name] = { type: "iri", value: field.iri };
    } else {
      const value = field.value.trim();
      if (value !== "") bindings[field.spec.name] = value;
    }
  }
  return bindings;
}

export function bindSuggestion(field: FieldState, term: TermSuggestion): void {
  field.iri = term.iri;
  field.value = term.label;
  field.suggestions = [];
}

const ABSOLUTE_IRI_RE = /^https?:\/\/\S+$/;

/** A keystroke unbinds the term; pasting a full IRI binds it directly. */
export function editTermField(field: FieldState, text: string): void {
  field.value = text;
  field.iri = ABSOLUTE_IRI_RE.test(text.trim()) ? text.trim() : null;
  field.touched = true;
}

export const MIN_QUERY_LENGTH = 2;

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  delayMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => fn(...args), delayMs);
  };
}
