/**
 * Typed client for the semantic-units HTTP service.
 *
 * The client never builds triples or graph patterns; every mutation maps
 * onto one registry-driven endpoint and the server decides what the
 * statement's data graph looks like.
 */

export interface IriRef {
  type: "iri";
  value: string;
}

export type BindingValue = string | IriRef;

export interface RegistryCounts {
  statement_classes: number;
  item_classes: number;
  tree_classes: number;
}

export interface HealthInfo {
  status: string;
  mode: string;
  registry: RegistryCounts;
  units: number;
  active_quads: number;
}

export interface EntrySummary {
  entry: string;
  doi: string | null;
  title: string | null;
  subject: string;
}

export interface TreeNode {
  item: string;
  parent: string | null;
  label: string;
  subject: string | null;
}

export interface PartonomyInfo {
  unit: string;
  root: string | null;
  relation: string | null;
}

export interface TreePayload {
  root: string;
  nodes: TreeNode[];
  partonomies?: PartonomyInfo[];
}

export interface CreatedEntry {
  entry: string;
  doi: string;
  title: string | null;
  tree: TreePayload;
}

export interface SlotSpec {
  name: string;
  role: string;
  range: string;
  input_mode: string;
  required: boolean;
}

export interface StatementForm {
  class: string;
  description: string;
  slots: SlotSpec[];
}

export interface CertaintyInfo {
  level: string;
  note: string | null;
}

export interface UnitInfo {
  id: string;
  status: string;
  created_at: string;
  kind: string;
  class: string | null;
  subject: string | null;
  quantification?: string;
  predecessor?: string | null;
  successor?: string | null;
  fresh_nodes?: Record<string, string>;
  certainty?: CertaintyInfo | null;
  follow_ups?: StatementForm[];
  members?: string[];
  offers?: StatementForm[];
}

export interface DisplayField {
  placeholder: string;
  text: string;
  filter: string | null;
  source_node: string | null;
}

export interface DisplayPayload {
  unit: string;
  kind: string;
  class: string | null;
  line: string;
  subject: string | null;
  fields: DisplayField[];
  attached: DisplayPayload[];
  members: DisplayPayload[];
  value_bearing_nodes: string[];
}

export interface UnitDetail {
  unit: UnitInfo;
  payload: DisplayPayload;
}

export interface CreatedStatement {
  unit: string;
  class: string;
  subject: string;
  fresh_nodes: Record<string, string>;
}

export interface EditEvent {
  seq: number;
  actor: string;
  timestamp: string;
  unit: string;
  kind: string;
  slot: string | null;
  before: string | null;
  after: string | null;
}

export interface TermSuggestion {
  iri: string;
  label: string;
  vocabulary: string | null;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details: unknown = null,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (...args) => globalThis.fetch(...args),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, "provider-unavailable", `service unreachable: ${err}`);
    }
    if (!response.ok) {
      let code = "http-error";
      let message = `${response.status} on ${path}`;
      let details: unknown = null;
      try {
        const body = await response.json();
        code = body.code ?? code;
        message = body.message ?? message;
        details = body.details ?? null;
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new ApiError(response.status, code, message, details);
    }
    return response;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.request(path, init);
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown, method = "POST"): Promise<T> {
    return this.json<T>(path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<HealthInfo> {
    return this.json("/health");
  }

  createEntry(doi: string): Promise<CreatedEntry> {
    return this.post("/entries", { doi });
  }

  listEntries(): Promise<{ entries: EntrySummary[] }> {
    return this.json("/entries");
  }

  entryTree(entryId: string): Promise<TreePayload> {
    return this.json(`/entries/${encodeURI(entryId)}/tree`);
  }

  unitDetail(unitId: string, depth = 1): Promise<UnitDetail> {
    return this.json(`/units/${encodeURI(unitId)}?depth=${depth}`);
  }

  createStatement(
    unitId: string,
    classLabel: string,
    bindings: Record<string, BindingValue>,
  ): Promise<CreatedStatement> {
    return this.post(`/units/${encodeURI(unitId)}/statements`, {
      class: classLabel,
      bindings,
    });
  }

  updateSlot(unitId: string, slot: string, value: BindingValue): Promise<{ unit: string; slot: string }> {
    return this.post(`/statements/${encodeURI(unitId)}/slots/${slot}`, { value }, "PATCH");
  }

  deleteStatement(unitId: string): Promise<{ unit: string; status: string }> {
    return this.json(`/statements/${encodeURI(unitId)}`, { method: "DELETE" });
  }

  setCertainty(
    unitId: string,
    level: string,
    note?: string,
  ): Promise<{ unit: string; level: string; note: string | null }> {
    return this.post(`/statements/${encodeURI(unitId)}/certainty`, { level, note });
  }

  history(unitId: string, slot?: string): Promise<{ unit: string; events: EditEvent[] }> {
    const suffix = slot ? `?slot=${encodeURIComponent(slot)}` : "";
    return this.json(`/units/${encodeURI(unitId)}/history${suffix}`);
  }

  createSnapshot(unitId: string): Promise<{ version: string; target: string; created: string }> {
    return this.post(`/units/${encodeURI(unitId)}/snapshots`, {});
  }

  async version(versionId: string): Promise<string> {
    const response = await this.request(`/versions/${encodeURI(versionId)}`);
    return response.text();
  }

  async exportQuads(scope?: string): Promise<string> {
    const suffix = scope ? `?scope=${encodeURIComponent(scope)}` : "";
    const response = await this.request(`/export${suffix}`);
    return response.text();
  }

  async nanopub(unitId: string): Promise<string> {
    const response = await this.request(`/nanopub/${encodeURI(unitId)}`);
    return response.text();
  }

  searchTerms(query: string, slot?: string): Promise<{ suggestions: TermSuggestion[] }> {
    const params = new URLSearchParams({ q: query });
    if (slot) params.set("slot", slot);
    return this.json(`/terms?${params.toString()}`);
  }
}
