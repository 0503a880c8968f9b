/**
 * Application controller: one ApiClient, one mutable view state, full
 * re-render after every server round trip. Forms and expansion state live
 * on the controller so typed input survives re-renders; autocomplete
 * updates patch only their own dropdown to keep the input focused.
 */

import {
  ApiClient,
  ApiError,
  DisplayPayload,
  EditEvent,
  EntrySummary,
  HealthInfo,
  StatementForm,
  TermSuggestion,
  TreePayload,
  UnitDetail,
} from "./api.js";
import {
  FieldState,
  FormModel,
  TreeViewState,
  bindSuggestion,
  buildForm,
  debounce,
  editTermField,
  emptyTreeState,
  fieldError,
  formBindings,
  formValid,
  MIN_QUERY_LENGTH,
  reconcileSelection,
  treeRows,
} from "./state.js";

const CERTAINTY_LEVELS = ["certain", "likely", "possible", "unlikely"];
const DEBOUNCE_MS = 200;
// depth 2 so item members carry their attached statements in the line
const DETAIL_DEPTH = 2;

type Child = Node | string | null | undefined;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, unknown> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (value == null) continue;
    if (key.startsWith("on") && typeof value === "function") {
      (node as unknown as Record<string, unknown>)[key.toLowerCase()] = value;
    } else if (key === "className") {
      node.className = String(value);
    } else if (key === "disabled" || key === "checked" || key === "selected") {
      (node as unknown as Record<string, unknown>)[key] = Boolean(value);
    } else if (key === "value") {
      (node as HTMLInputElement).value = String(value);
    } else {
      node.setAttribute(key, String(value));
    }
  }
  for (const child of children) {
    if (child == null) continue;
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

export interface AppConfig {
  apiBase?: string;
  fetchFn?: (input: string, init?: RequestInit) => Promise<Response>;
  debounceMs?: number;
}

export class App {
  api: ApiClient;
  health: HealthInfo | null = null;
  entries: EntrySummary[] = [];
  tree: TreeViewState = emptyTreeState();
  treePayload: TreePayload | null = null;
  detail: UnitDetail | null = null;
  expanded = new Map<string, UnitDetail>();
  histories = new Map<string, EditEvent[]>();
  partonomies = new Map<string, DisplayPayload>();
  forms = new Map<string, FormModel>();
  openForms = new Set<string>();
  busy = false;
  error: string | null = null;
  notice: string | null = null;
  private debounceMs: number;

  constructor(private root: HTMLElement, config: AppConfig = {}) {
    this.api = new ApiClient(config.apiBase ?? "", config.fetchFn);
    this.debounceMs = config.debounceMs ?? DEBOUNCE_MS;
  }

  async start(): Promise<void> {
    await this.guard(async () => {
      this.health = await this.api.health();
      this.entries = (await this.api.listEntries()).entries;
    });
    this.render();
  }

  /** Runs a server interaction, funnels failures into the error banner. */
  private async guard(work: () => Promise<void>): Promise<boolean> {
    try {
      await work();
      this.error = null;
      return true;
    } catch (err) {
      this.error = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      return false;
    }
  }

  /** Reads may overlap; whoever finishes last paints the freshest state. */
  private async load(work: () => Promise<void>): Promise<void> {
    await this.guard(work);
    this.render();
  }

  /** Mutations are serialized: one in flight, later clicks are dropped. */
  private async mutate(work: () => Promise<void>): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    this.render();
    await this.guard(work);
    this.busy = false;
    this.render();
  }

  // -- data loading --------------------------------------------------------

  async createEntry(doi: string): Promise<void> {
    await this.mutate(async () => {
      const created = await this.api.createEntry(doi);
      this.entries = (await this.api.listEntries()).entries;
      this.tree = { entry: created.entry, expanded: new Set(), selected: null };
      await this.reloadTree();
    });
  }

  async openEntry(entryId: string): Promise<void> {
    await this.load(async () => {
      this.tree = { entry: entryId, expanded: new Set(), selected: null };
      this.detail = null;
      this.expanded.clear();
      await this.reloadTree();
    });
  }

  /** Tree, selection, detail, and expanded statements, all from the server. */
  private async reloadTree(): Promise<void> {
    if (!this.tree.entry) return;
    this.treePayload = await this.api.entryTree(this.tree.entry);
    this.tree = reconcileSelection({ ...this.tree, entry: this.tree.entry }, this.treePayload);
    if (this.tree.selected) {
      this.detail = await this.api.unitDetail(this.tree.selected, DETAIL_DEPTH);
    }
    for (const unitId of [...this.expanded.keys()]) {
      try {
        this.expanded.set(unitId, await this.api.unitDetail(unitId));
      } catch {
        this.expanded.delete(unitId);
      }
    }
  }

  async select(itemId: string): Promise<void> {
    await this.load(async () => {
      this.tree = { ...this.tree, selected: itemId };
      this.detail = await this.api.unitDetail(itemId, DETAIL_DEPTH);
    });
  }

  async toggleStatement(unitId: string): Promise<void> {
    if (this.expanded.has(unitId)) {
      this.expanded.delete(unitId);
      this.render();
      return;
    }
    await this.load(async () => {
      this.expanded.set(unitId, await this.api.unitDetail(unitId));
    });
  }

  async toggleHistory(unitId: string): Promise<void> {
    if (this.histories.has(unitId)) {
      this.histories.delete(unitId);
      this.render();
      return;
    }
    await this.load(async () => {
      this.histories.set(unitId, (await this.api.history(unitId)).events);
    });
  }

  async togglePartonomy(unitId: string): Promise<void> {
    if (this.partonomies.has(unitId)) {
      this.partonomies.delete(unitId);
      this.render();
      return;
    }
    await this.load(async () => {
      this.partonomies.set(unitId, (await this.api.unitDetail(unitId)).payload);
    });
  }

  // -- mutations -----------------------------------------------------------

  formFor(key: string, form: StatementForm): FormModel {
    let model = this.forms.get(key);
    if (!model) {
      model = buildForm(form);
      this.forms.set(key, model);
    }
    return model;
  }

  async submitForm(ownerUnit: string, key: string, model: FormModel): Promise<void> {
    if (!formValid(model)) return;
    await this.mutate(async () => {
      await this.api.createStatement(ownerUnit, model.classLabel, formBindings(model));
      this.forms.delete(key);
      this.openForms.delete(key);
      await this.reloadTree();
    });
  }

  async saveSlot(unitId: string, slot: string, value: string): Promise<void> {
    await this.mutate(async () => {
      const result = await this.api.updateSlot(unitId, slot, value);
      this.expanded.delete(unitId);
      this.histories.delete(unitId);
      this.expanded.set(result.unit, await this.api.unitDetail(result.unit));
      await this.reloadTree();
    });
  }

  async removeStatement(unitId: string): Promise<void> {
    await this.mutate(async () => {
      await this.api.deleteStatement(unitId);
      this.expanded.delete(unitId);
      await this.reloadTree();
    });
  }

  async saveCertainty(unitId: string, level: string, note: string): Promise<void> {
    if (!level) return;
    await this.mutate(async () => {
      await this.api.setCertainty(unitId, level, note || undefined);
      this.expanded.set(unitId, await this.api.unitDetail(unitId));
      await this.reloadTree();
    });
  }

  // -- autocomplete --------------------------------------------------------

  /** One debounced query pipeline per field; results patch only the dropdown. */
  autocompleteFor(
    field: FieldState,
    classLabel: string,
    repaint: () => void,
  ): (query: string) => void {
    const run = async (query: string) => {
      if (field.iri !== null || query.trim().length < MIN_QUERY_LENGTH) {
        field.suggestions = [];
        repaint();
        return;
      }
      try {
        const slot = `${classLabel}.${field.spec.name}`;
        field.suggestions = (await this.api.searchTerms(query.trim(), slot)).suggestions;
        this.notice = null;
      } catch (err) {
        field.suggestions = [];
        this.notice =
          err instanceof ApiError && err.code === "provider-unavailable"
            ? "term lookup unavailable; paste a full IRI instead"
            : `term lookup failed: ${err instanceof ApiError ? err.message : err}`;
      }
      repaint();
    };
    return debounce((query: string) => void run(query), this.debounceMs);
  }

  // -- rendering -----------------------------------------------------------

  render(): void {
    this.root.replaceChildren(
      this.renderTopBar(),
      this.error ? el("div", { className: "banner error", role: "alert" }, this.error) : "",
      this.notice ? el("div", { className: "banner notice" }, this.notice) : "",
      el(
        "div",
        { className: "columns" },
        this.renderTreePanel(),
        this.renderDetailPanel(),
      ) as Node,
    );
  }

  private renderTopBar(): HTMLElement {
    const doiInput = el("input", {
      id: "doi-input",
      placeholder: "DOI, e.g. 10.1056/NEJMoa2001316",
      size: "34",
    });
    const createButton = el(
      "button",
      {
        id: "create-entry",
        disabled: this.busy,
        onClick: () => void this.createEntry(doiInput.value.trim()),
      },
      "Create entry",
    );
    const entrySelect = el(
      "select",
      {
        id: "entry-select",
        onChange: (event: Event) => {
          const value = (event.target as HTMLSelectElement).value;
          if (value) void this.openEntry(value);
        },
      },
      el("option", { value: "" }, "open an entry"),
      ...this.entries.map((entry: EntrySummary) =>
        el(
          "option",
          { value: entry.entry, selected: entry.entry === this.tree.entry },
          `${entry.doi ?? entry.entry}${entry.title ? ` - ${entry.title}` : ""}`,
        ),
      ),
    );
    const healthText = this.health
      ? `${this.health.registry.statement_classes} statement classes, ` +
        `${this.health.units} units, ${this.health.active_quads} quads (${this.health.mode})`
      : "connecting";
    return el(
      "header",
      { className: "topbar" },
      el("h1", {}, "semantic units"),
      doiInput,
      createButton,
      entrySelect,
      el("span", { id: "health", className: "muted" }, healthText),
    );
  }

  private renderTreePanel(): HTMLElement {
    const panel = el("nav", { id: "tree-panel", className: "panel" });
    if (!this.treePayload) {
      panel.append(el("p", { className: "muted" }, "No entry open."));
      return panel;
    }
    const list = el("ul", { className: "tree", role: "tree" });
    for (const row of treeRows(this.treePayload)) {
      const selected = row.node.item === this.tree.selected;
      list.append(
        el(
          "li",
          { role: "treeitem", style: `padding-left:${row.depth}em` },
          el(
            "button",
            {
              className: `tree-node${selected ? " selected" : ""}`,
              "data-item": row.node.item,
              onClick: () => void this.select(row.node.item),
            },
            row.node.label,
          ),
        ),
      );
    }
    panel.append(list);
    panel.append(this.renderPartonomies());
    return panel;
  }

  private renderPartonomies(): HTMLElement {
    const box = el("section", { id: "partonomies" }, el("h2", {}, "partonomy"));
    const partonomies = this.treePayload?.partonomies ?? [];
    if (partonomies.length === 0) {
      box.append(el("p", { className: "muted" }, "No granularity tree yet."));
      return box;
    }
    const labelOf = new Map(
      (this.treePayload?.nodes ?? []).map((n) => [n.subject, n.label]),
    );
    for (const partonomy of partonomies) {
      const open = this.partonomies.has(partonomy.unit);
      box.append(
        el(
          "button",
          {
            className: "link partonomy-toggle",
            onClick: () => void this.togglePartonomy(partonomy.unit),
          },
          `${partonomy.relation ?? "parthood"} tree at ${
            labelOf.get(partonomy.root ?? "") ?? partonomy.root ?? "?"
          }`,
        ),
      );
      if (open) {
        const payload = this.partonomies.get(partonomy.unit)!;
        const nodes = this.treePayload?.nodes ?? [];
        const itemBySubject = new Map(nodes.map((n) => [n.subject, n]));
        const byWhole = new Map<string, DisplayPayload[]>();
        for (const member of payload.members) {
          const subject = member.subject ?? "";
          byWhole.set(subject, [...(byWhole.get(subject) ?? []), member]);
        }
        const tree = el("ul", { className: "partonomy-tree" });
        const emit = (subject: string, label: string, depth: number, seen: Set<string>) => {
          tree.append(el("li", { style: `padding-left:${depth}em` }, label));
          if (seen.has(subject)) return;
          seen.add(subject);
          const wholeItem = itemBySubject.get(subject)?.item;
          for (const member of byWhole.get(subject) ?? []) {
            // the edge's minted part is the nav child under the whole whose
            // label matches the part-class label of this statement
            const partLabel = member.fields[0]?.text ?? member.line;
            const child = nodes.find(
              (n) => n.parent === wholeItem && n.label === partLabel,
            );
            emit(child?.subject ?? member.unit, partLabel, depth + 1, seen);
          }
        };
        const rootLabel = labelOf.get(partonomy.root ?? "") ?? payload.line;
        emit(partonomy.root ?? "", rootLabel, 0, new Set());
        box.append(tree);
      }
    }
    return box;
  }

  private renderDetailPanel(): HTMLElement {
    const panel = el("main", { id: "detail-panel", className: "panel" });
    if (!this.detail) {
      panel.append(el("p", { className: "muted" }, "Select a node on the left."));
      return panel;
    }
    const { unit, payload } = this.detail;
    panel.append(
      el(
        "header",
        { className: "detail-header" },
        el("h2", { id: "detail-title" }, payload.line || unit.class || unit.id),
        el("span", { className: "muted" }, `${unit.kind}${unit.class ? ` / ${unit.class}` : ""}`),
      ),
    );
    const statements = el("section", { id: "statements" });
    for (const member of payload.members) {
      statements.append(this.renderStatement(member));
    }
    if (payload.members.length === 0) {
      statements.append(el("p", { className: "muted" }, "No statements yet."));
    }
    panel.append(statements);
    const offers = unit.offers ?? [];
    if (offers.length > 0) {
      const section = el("section", { id: "offers" }, el("h3", {}, "add a statement"));
      for (const offer of offers) {
        section.append(this.renderFormToggle(unit.id, offer));
      }
      panel.append(section);
    }
    panel.append(this.renderUnitTools(unit.id));
    return panel;
  }

  private renderStatement(payload: DisplayPayload): HTMLElement {
    const expanded = this.expanded.get(payload.unit);
    const block = el("article", { className: "statement", "data-unit": payload.unit });
    block.append(
      el(
        "div",
        { className: "statement-line" },
        el(
          "button",
          {
            className: "link statement-toggle",
            onClick: () => void this.toggleStatement(payload.unit),
          },
          expanded ? "hide" : "edit",
        ),
        el("span", { className: "line-text" }, payload.line),
      ),
    );
    if (!expanded) return block;
    const unit = expanded.unit;
    const isStatement = unit.kind === "statement";
    const details = el("div", { className: "statement-details" });
    details.append(
      el(
        "div",
        { className: "muted statement-meta" },
        `${unit.class} (${unit.status})`,
        unit.certainty
          ? el(
              "span",
              { className: "certainty-tag" },
              ` certainty: ${unit.certainty.level}${
                unit.certainty.note ? ` (${unit.certainty.note})` : ""
              }`,
            )
          : "",
      ),
    );
    if (isStatement) {
      details.append(this.renderSlotEditors(expanded));
      details.append(this.renderCertaintyControl(unit.id, unit.certainty?.level ?? ""));
    }
    for (const followUp of unit.follow_ups ?? []) {
      details.append(this.renderFormToggle(unit.id, followUp));
    }
    if (expanded.payload.attached.length > 0) {
      const attached = el("div", { className: "attached" }, el("h4", {}, "attached"));
      for (const child of expanded.payload.attached) {
        attached.append(this.renderStatement(child));
      }
      details.append(attached);
    }
    const actions = el(
      "div",
      { className: "statement-actions" },
      el(
        "button",
        {
          className: "link",
          onClick: () => void this.toggleHistory(unit.id),
        },
        this.histories.has(unit.id) ? "hide history" : "history",
      ),
    );
    if (isStatement) {
      actions.append(
        el(
          "button",
          {
            className: "link danger",
            disabled: this.busy,
            onClick: () => void this.removeStatement(unit.id),
          },
          "delete",
        ),
      );
    }
    details.append(actions);
    const events = this.histories.get(unit.id);
    if (events) details.append(this.renderHistory(events));
    block.append(details);
    return block;
  }

  private renderSlotEditors(detail: UnitDetail): HTMLElement {
    const box = el("div", { className: "slot-editors" });
    for (const field of detail.payload.fields) {
      if (field.filter !== null) continue; // only raw literal slots edit in place
      const input = el("input", {
        value: field.text,
        "data-slot": field.placeholder,
        size: "10",
      });
      box.append(
        el(
          "label",
          { className: "slot-editor" },
          `${field.placeholder}: `,
          input,
          el(
            "button",
            {
              className: "link",
              disabled: this.busy,
              onClick: () => void this.saveSlot(detail.unit.id, field.placeholder, input.value.trim()),
            },
            "save",
          ),
        ),
      );
    }
    return box;
  }

  private renderCertaintyControl(unitId: string, current: string): HTMLElement {
    const select = el(
      "select",
      { className: "certainty-select" },
      el("option", { value: "" }, "certainty?"),
      ...CERTAINTY_LEVELS.map((level) =>
        el("option", { value: level, selected: level === current }, level),
      ),
    );
    const note = el("input", { placeholder: "note", size: "14", className: "certainty-note" });
    return el(
      "div",
      { className: "certainty-control" },
      select,
      note,
      el(
        "button",
        {
          className: "link",
          disabled: this.busy,
          onClick: () => void this.saveCertainty(unitId, select.value, note.value.trim()),
        },
        "set certainty",
      ),
    );
  }

  private renderHistory(events: EditEvent[]): HTMLElement {
    const table = el("table", { className: "history" });
    table.append(
      el(
        "tr",
        {},
        ...["seq", "kind", "slot", "before", "after", "actor"].map((h) => el("th", {}, h)),
      ),
    );
    for (const event of events) {
      table.append(
        el(
          "tr",
          {},
          el("td", {}, String(event.seq)),
          el("td", {}, event.kind),
          el("td", {}, event.slot ?? ""),
          el("td", {}, event.before ?? ""),
          el("td", {}, event.after ?? ""),
          el("td", {}, event.actor),
        ),
      );
    }
    return table;
  }

  private renderFormToggle(ownerUnit: string, form: StatementForm): HTMLElement {
    const key = `${ownerUnit}:${form.class}`;
    const open = this.openForms.has(key);
    const box = el("div", { className: "form-box", "data-form": form.class });
    box.append(
      el(
        "button",
        {
          className: "link form-toggle",
          onClick: () => {
            if (open) this.openForms.delete(key);
            else this.openForms.add(key);
            this.render();
          },
        },
        `${open ? "- " : "+ "}${form.class}`,
      ),
    );
    if (open) box.append(this.renderForm(ownerUnit, key, form));
    return box;
  }

  private renderForm(ownerUnit: string, key: string, form: StatementForm): HTMLElement {
    const model = this.formFor(key, form);
    const formEl = el("form", {
      className: "statement-form",
      onSubmit: (event: Event) => {
        event.preventDefault();
        void this.submitForm(ownerUnit, key, model);
      },
    });
    if (model.description) formEl.append(el("p", { className: "muted" }, model.description));
    const submit = el(
      "button",
      { type: "submit", className: "submit", disabled: !formValid(model) || this.busy },
      "add",
    );
    const refreshSubmit = () => {
      submit.disabled = !formValid(model) || this.busy;
    };
    for (const field of model.fields) {
      formEl.append(this.renderField(field, form.class, refreshSubmit));
    }
    formEl.append(submit);
    return formEl;
  }

  private renderField(field: FieldState, classLabel: string, onChange: () => void): HTMLElement {
    const row = el("div", { className: "field" });
    const errorSpan = el("span", { className: "field-error" });
    const refreshError = () => {
      errorSpan.textContent = field.touched ? fieldError(field) ?? "" : "";
    };
    const input = el("input", {
      value: field.value,
      name: field.spec.name,
      "data-kind": field.kind,
      autocomplete: "off",
      placeholder: field.kind === "numeric" ? "number" : field.spec.name,
    });
    row.append(
      el("label", {}, `${field.spec.name}${field.spec.required ? "" : " (optional)"}: `, input),
      errorSpan,
    );
    if (field.kind === "term") {
      const dropdown = el("ul", { className: "suggestions", role: "listbox" });
      const repaint = () => {
        dropdown.replaceChildren(
          ...field.suggestions.map((term: TermSuggestion) =>
            el(
              "li",
              {},
              el(
                "button",
                {
                  className: "link suggestion",
                  "data-iri": term.iri,
                  onClick: () => {
                    bindSuggestion(field, term);
                    input.value = field.value;
                    dropdown.replaceChildren();
                    refreshError();
                    onChange();
                  },
                },
                `${term.label}${term.vocabulary ? ` [${term.vocabulary}]` : ""}`,
              ),
            ),
          ),
        );
        if (field.suggestions.length === 0 && input.value.trim().length >= MIN_QUERY_LENGTH && field.iri === null) {
          dropdown.replaceChildren(el("li", { className: "muted empty" }, "no matches"));
        }
        refreshError();
        onChange();
      };
      const query = this.autocompleteFor(field, classLabel, repaint);
      input.oninput = () => {
        editTermField(field, input.value);
        refreshError();
        onChange();
        query(input.value);
      };
      row.append(dropdown);
    } else {
      input.oninput = () => {
        field.value = input.value;
        field.touched = true;
        refreshError();
        onChange();
      };
    }
    return row;
  }

  private renderUnitTools(unitId: string): HTMLElement {
    return el(
      "footer",
      { className: "unit-tools muted" },
      el(
        "button",
        {
          className: "link",
          disabled: this.busy,
          onClick: () =>
            void this.mutate(async () => {
              const snap = await this.api.createSnapshot(unitId);
              this.notice = `snapshot ${snap.version}`;
            }),
        },
        "snapshot",
      ),
      el("span", {}, ` unit ${unitId}`),
    );
  }
}

export function mountApp(root: HTMLElement, config: AppConfig = {}): App {
  const app = new App(root, config);
  void app.start();
  return app;
}
