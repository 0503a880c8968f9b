// @vitest-environment happy-dom
//
// Drives the real DOM app against a freshly spawned fixture-mode service,
// end to end over HTTP: entry creation, tree navigation, guided forms with
// autocomplete, the measurement round trip, and the edit controls.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import { createServer } from "node:net";
import * as path from "node:path";

import { App } from "../src/app.js";

let BASE = "";
const REPO_ROOT = path.resolve(new URL(".", import.meta.url).pathname, "..", "..");
const DOI = "10.1056/NEJMoa2001316";
const IDO_POPULATION = "http://purl.obolibrary.org/obo/IDO_0000513";
const R0_LINE = "basic reproduction number: 2.2 (95% CI 1.9 to 2.6)";

let server: ChildProcess;
let serverOutput = "";

async function waitFor<T>(
  probe: () => T | null | undefined | false,
  what: string,
  timeoutMs = 15000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const result = probe();
    if (result) return result;
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for ${what}\nserver output:\n${serverOutput}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

async function waitForAsync<T>(
  probe: () => Promise<T | null | undefined | false>,
  what: string,
  timeoutMs = 20000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    let result: T | null | undefined | false = null;
    try {
      result = await probe();
    } catch {
      // not up yet
    }
    if (result) return result;
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for ${what}\nserver output:\n${serverOutput}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      const port = typeof address === "object" && address ? address.port : 0;
      probe.close(() => resolve(port));
    });
  });
}

beforeAll(async () => {
  const port = await freePort();
  BASE = `http://127.0.0.1:${port}`;
  // keep the document origin on the API origin so fetch is same-origin
  (globalThis as { happyDOM?: { setURL(url: string): void } }).happyDOM?.setURL(BASE);
  server = spawn(
    "python3",
    ["-m", "semantic_units.cli", "serve", "--host", "127.0.0.1", "--port", String(port)],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => (serverOutput += chunk));
  server.stderr?.on("data", (chunk) => (serverOutput += chunk));
  await waitForAsync(async () => {
    const response = await fetch(`${BASE}/health`);
    const body = await response.json();
    return body.status === "ok";
  }, "service /health");
});

afterAll(() => {
  server?.kill();
});

function mount(): { app: App; root: HTMLElement } {
  const root = document.createElement("div");
  document.body.append(root);
  const app = new App(root, { apiBase: BASE, debounceMs: 10 });
  return { app, root };
}

function type(input: HTMLInputElement, text: string): void {
  input.value = text;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

function treeButtons(root: HTMLElement): HTMLButtonElement[] {
  return [...root.querySelectorAll<HTMLButtonElement>("button.tree-node")];
}

function treeButton(root: HTMLElement, label: string): HTMLButtonElement | undefined {
  return treeButtons(root).find((b) => b.textContent === label);
}

function statementLines(root: HTMLElement): string[] {
  return [...root.querySelectorAll("#statements .line-text")].map((n) => n.textContent ?? "");
}

function openForm(root: HTMLElement, classLabel: string): HTMLElement {
  const box = root.querySelector<HTMLElement>(`.form-box[data-form="${classLabel}"]`);
  if (!box) throw new Error(`no form box for ${classLabel}`);
  if (!box.querySelector("form")) {
    box.querySelector<HTMLButtonElement>("button.form-toggle")!.click();
  }
  const again = root.querySelector<HTMLElement>(`.form-box[data-form="${classLabel}"]`);
  return again!;
}

function fieldInput(form: HTMLElement, name: string): HTMLInputElement {
  const input = form.querySelector<HTMLInputElement>(`input[name="${name}"]`);
  if (!input) throw new Error(`no input for slot ${name}`);
  return input;
}

async function pickTerm(
  root: HTMLElement,
  formClass: string,
  slot: string,
  query: string,
  expectIri?: string,
): Promise<string> {
  const form = openForm(root, formClass);
  type(fieldInput(form, slot), query);
  const suggestion = await waitFor(() => {
    const current = openForm(root, formClass);
    return current.querySelector<HTMLButtonElement>("button.suggestion");
  }, `suggestion for ${query}`);
  const iri = suggestion.getAttribute("data-iri") ?? "";
  if (expectIri) expect(iri).toBe(expectIri);
  suggestion.click();
  return iri;
}

function submitForm(root: HTMLElement, formClass: string): void {
  const form = openForm(root, formClass);
  const submit = form.querySelector<HTMLButtonElement>("button.submit");
  if (!submit) throw new Error(`no submit button for ${formClass}`);
  expect(submit.disabled).toBe(false);
  submit.click();
}

describe("browser walkthrough against the fixture service", () => {
  it("builds the reference entry from DOI to rendered measurement", async () => {
    const { app, root } = mount();
    await app.start();
    await waitFor(
      () => root.querySelector("#health")?.textContent?.includes("21 statement classes"),
      "health line",
    );

    // entry from the fixture DOI
    type(root.querySelector<HTMLInputElement>("#doi-input")!, DOI);
    root.querySelector<HTMLButtonElement>("#create-entry")!.click();
    await waitFor(() => treeButton(root, "research result"), "fresh entry tree");
    const labels = treeButtons(root).map((b) => b.textContent);
    expect(labels).toContain("research activity");
    expect(labels.length).toBe(3);
    expect(labels[0]).toContain("Early Transmission Dynamics");

    // the result item offers is-about; autocomplete binds the population term
    treeButton(root, "research result")!.click();
    await waitFor(
      () => root.querySelector('.form-box[data-form="is-about"]'),
      "is-about offer",
    );
    await pickTerm(root, "is-about", "entity-class", "infectious agent pop", IDO_POPULATION);
    submitForm(root, "is-about");

    // the tree mirrors the new item after the round trip
    const populationButton = await waitFor(
      () => treeButton(root, "infectious agent population"),
      "population node in tree",
    );
    populationButton.click();
    await waitFor(
      () => root.querySelector("#detail-title")?.textContent === "infectious agent population",
      "population detail",
    );
    expect(root.querySelector('.form-box[data-form="has-quality"]')).toBeTruthy();
    expect(root.querySelector('.form-box[data-form="has-part-material"]')).toBeTruthy();

    // quality, then the enabled follow-up measurement on the statement line
    await pickTerm(root, "has-quality", "quality-class", "basic reproduction");
    submitForm(root, "has-quality");
    await waitFor(
      () => statementLines(root).some((line) => line.includes("basic reproduction number")),
      "quality statement line",
    );
    await waitFor(
      () => treeButton(root, "basic reproduction number"),
      "quality node in tree",
    );

    root.querySelector<HTMLButtonElement>(".statement .statement-toggle")!.click();
    await waitFor(
      () => root.querySelector('.form-box[data-form="R0-measurement-with-CI"]'),
      "measurement follow-up form",
    );
    const measurementForm = openForm(root, "R0-measurement-with-CI");
    type(fieldInput(measurementForm, "value"), "2.2");
    type(fieldInput(measurementForm, "level"), "0.95");
    type(fieldInput(measurementForm, "low"), "1.9");
    type(fieldInput(measurementForm, "high"), "2.6");
    await pickTerm(root, "R0-measurement-with-CI", "unit", "dimensionless");
    submitForm(root, "R0-measurement-with-CI");

    // the item re-renders the quality as the single published line
    await waitFor(
      () => statementLines(root).some((line) => line.startsWith(R0_LINE)),
      "rendered measurement line",
    );
  }, 60000);

  it("autocomplete in a fresh session still binds the population IRI", async () => {
    const { app, root } = mount();
    await app.start();
    const entrySelect = await waitFor(() => {
      const select = root.querySelector<HTMLSelectElement>("#entry-select");
      return select && select.options.length > 1 ? select : null;
    }, "entry listing");
    entrySelect.value = entrySelect.options[1].value;
    entrySelect.dispatchEvent(new Event("change", { bubbles: true }));
    const resultButton = await waitFor(
      () => treeButton(root, "research result"),
      "tree after reopening entry",
    );
    resultButton.click();
    await waitFor(() => root.querySelector('.form-box[data-form="is-about"]'), "is-about offer");
    const iri = await pickTerm(root, "is-about", "entity-class", "infectious agent pop");
    expect(iri).toBe(IDO_POPULATION);
  }, 60000);

  it("edits a slot, attaches certainty, shows history, deletes a part", async () => {
    const { app, root } = mount();
    await app.start();
    const entrySelect = await waitFor(() => {
      const select = root.querySelector<HTMLSelectElement>("#entry-select");
      return select && select.options.length > 1 ? select : null;
    }, "entry listing");
    entrySelect.value = entrySelect.options[1].value;
    entrySelect.dispatchEvent(new Event("change", { bubbles: true }));
    const populationButton = await waitFor(
      () => treeButton(root, "infectious agent population"),
      "population node",
    );
    populationButton.click();
    await waitFor(
      () => root.querySelector("#detail-title")?.textContent === "infectious agent population",
      "population detail",
    );
    await waitFor(
      () => statementLines(root).some((line) => line.startsWith(R0_LINE)),
      "measurement line",
    );

    // expand the quality statement, then its attached measurement
    const qualityBlock = await waitFor(
      () =>
        [...root.querySelectorAll<HTMLElement>("#statements .statement")].find((b) =>
          b.querySelector(".line-text")?.textContent?.includes("basic reproduction"),
        ),
      "quality block",
    );
    qualityBlock.querySelector<HTMLButtonElement>(".statement-toggle")!.click();
    const attachedToggle = await waitFor(
      () => root.querySelector<HTMLButtonElement>(".attached .statement-toggle"),
      "attached measurement",
    );
    attachedToggle.click();
    const valueInput = await waitFor(
      () => root.querySelector<HTMLInputElement>('.slot-editors input[data-slot="value"]'),
      "value slot editor",
    );
    expect(valueInput.value).toBe("2.2");
    valueInput.value = "2.3";
    valueInput.parentElement!.querySelector<HTMLButtonElement>("button.link")!.click();
    await waitFor(
      () => statementLines(root).some((line) => line.includes("2.3 (95% CI 1.9 to 2.6)")),
      "updated measurement line",
    );

    // certainty dropdown on the quality statement
    const freshQualityBlock = await waitFor(
      () =>
        [...root.querySelectorAll<HTMLElement>("#statements .statement")].find((b) =>
          b.querySelector(".line-text")?.textContent?.includes("basic reproduction"),
        ),
      "quality block after update",
    );
    if (!freshQualityBlock.querySelector(".statement-details")) {
      freshQualityBlock.querySelector<HTMLButtonElement>(".statement-toggle")!.click();
      await waitFor(() => root.querySelector(".statement-details"), "expanded quality");
    }
    const certaintyBox = await waitFor(
      () => root.querySelector<HTMLElement>(".certainty-control"),
      "certainty control",
    );
    certaintyBox.querySelector<HTMLSelectElement>("select")!.value = "likely";
    certaintyBox.querySelector<HTMLInputElement>("input")!.value = "replicated";
    certaintyBox.querySelectorAll<HTMLButtonElement>("button.link").forEach((b) => {
      if (b.textContent === "set certainty") b.click();
    });
    await waitFor(
      () => root.querySelector(".certainty-tag")?.textContent?.includes("likely"),
      "certainty tag",
    );

    // history lists the events for the expanded statement in seq order
    const historyButton = await waitFor(
      () =>
        [...root.querySelectorAll<HTMLButtonElement>(".statement-actions button.link")].find(
          (b) => b.textContent === "history",
        ),
      "history button",
    );
    historyButton.click();
    const history = await waitFor(
      () => root.querySelector<HTMLTableElement>("table.history"),
      "history table",
    );
    const seqs = [...history.querySelectorAll("tr")]
      .slice(1)
      .map((tr) => Number(tr.children[0].textContent));
    expect(seqs.length).toBeGreaterThan(0);
    expect([...seqs].sort((a, b) => a - b)).toEqual(seqs);

    // add a part, then delete it; the tree follows both round trips
    await pickTerm(root, "has-part-material", "part-class", "organism");
    submitForm(root, "has-part-material");
    const organismButton = await waitFor(
      () => treeButton(root, "organism"),
      "organism node in tree",
    );
    expect(organismButton).toBeTruthy();
    const partBlock = await waitFor(
      () =>
        [...root.querySelectorAll<HTMLElement>("#statements .statement")].find((b) =>
          b.querySelector(".line-text")?.textContent?.includes("has part organism"),
        ),
      "part statement block",
    );
    partBlock.querySelector<HTMLButtonElement>(".statement-toggle")!.click();
    const deleteButton = await waitFor(() => {
      const block = [...root.querySelectorAll<HTMLElement>("#statements .statement")].find(
        (b) => b.querySelector(".line-text")?.textContent?.includes("has part organism"),
      );
      return block?.querySelector<HTMLButtonElement>("button.danger") ?? null;
    }, "delete button on the part statement");
    deleteButton.click();
    await waitFor(() => !treeButton(root, "organism"), "organism gone from tree");
    expect(statementLines(root).some((line) => line.includes("has part organism"))).toBe(false);
  }, 60000);

  it("renders the granularity tree as an indented partonomy", async () => {
    const { app, root } = mount();
    await app.start();
    const entrySelect = await waitFor(() => {
      const select = root.querySelector<HTMLSelectElement>("#entry-select");
      return select && select.options.length > 1 ? select : null;
    }, "entry listing");
    entrySelect.value = entrySelect.options[1].value;
    entrySelect.dispatchEvent(new Event("change", { bubbles: true }));
    const populationButton = await waitFor(
      () => treeButton(root, "infectious agent population"),
      "population node",
    );
    populationButton.click();
    await waitFor(
      () => root.querySelector("#detail-title")?.textContent === "infectious agent population",
      "population detail",
    );

    // two connected parts cross the tree threshold
    await pickTerm(root, "has-part-material", "part-class", "Homo sapiens");
    submitForm(root, "has-part-material");
    await waitFor(() => treeButton(root, "Homo sapiens"), "first part in tree");
    await pickTerm(root, "has-part-material", "part-class", "organism");
    submitForm(root, "has-part-material");
    await waitFor(() => treeButton(root, "organism"), "second part in tree");

    const toggle = await waitFor(
      () => root.querySelector<HTMLButtonElement>("#partonomies .partonomy-toggle"),
      "partonomy toggle",
    );
    expect(toggle.textContent).toContain("has-part-material tree at infectious agent population");
    toggle.click();
    const rows = await waitFor(() => {
      const items = [...root.querySelectorAll<HTMLElement>("ul.partonomy-tree li")];
      return items.length >= 3 ? items : null;
    }, "partonomy rows");
    const byLabel = new Map(rows.map((li) => [li.textContent, li.style.paddingLeft]));
    expect(byLabel.get("infectious agent population")).toBe("0em");
    expect(byLabel.get("Homo sapiens")).toBe("1em");
    expect(byLabel.get("organism")).toBe("1em");
  }, 60000);

  it("surfaces service errors in the banner without crashing", async () => {
    const { app, root } = mount();
    await app.start();
    type(root.querySelector<HTMLInputElement>("#doi-input")!, "10.9999/unknown");
    root.querySelector<HTMLButtonElement>("#create-entry")!.click();
    const banner = await waitFor(
      () => root.querySelector(".banner.error"),
      "error banner",
    );
    expect(banner.textContent).toContain("not-found");
    expect(root.querySelector("#tree-panel")).toBeTruthy();
  }, 60000);
});
