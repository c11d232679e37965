/** Typed client for the search service HTTP API. */

export interface PatternMeta {
  id: string;
  classes: string[];
  gaps: number[];
}

export interface ConceptMeta {
  id: string;
  kind: string;
  label: string;
  parent: string | null;
  slang_count: number;
}

export interface ClassOptions {
  class: string;
  source: string;
  concepts?: ConceptMeta[];
  subcategories?: string[];
  operators?: { symbol: string; kind: string }[];
  units?: string[];
}

export interface Highlight {
  class: string;
  cs: number;
  ce: number;
  surface: string;
}

export interface ResultRow {
  doc: string;
  annotation: string;
  snippet: string;
  snippet_cs: number;
  span: { cs: number; ce: number };
  highlights: Highlight[];
  payloads: Record<string, string>[];
}

export interface SearchResponse {
  trace: number[];
  results: ResultRow[];
}

export interface DocPayload {
  id: string;
  source: string;
  text: string;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`api error ${status}: ${detail}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const text = await response.text();
  if (!response.ok) {
    let detail = text;
    try {
      detail = (JSON.parse(text) as { detail?: string }).detail ?? text;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return JSON.parse(text) as T;
}

export class ApiClient {
  constructor(private base: string = "") {}

  async patterns(): Promise<PatternMeta[]> {
    const payload = await asJson<{ patterns: PatternMeta[] }>(
      await fetch(`${this.base}/api/patterns`),
    );
    return payload.patterns;
  }

  async classOptions(cls: string): Promise<ClassOptions> {
    return asJson(await fetch(`${this.base}/api/classes/${encodeURIComponent(cls)}/options`));
  }

  /** POST the exact query string (already canonical) so the request body is
      byte-identical to what the CLI would send. */
  async search(queryJson: string, signal?: AbortSignal): Promise<SearchResponse> {
    return asJson(await fetch(`${this.base}/api/search`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: queryJson,
      signal,
    }));
  }

  async doc(id: string): Promise<DocPayload> {
    return asJson(await fetch(`${this.base}/api/docs/${encodeURIComponent(id)}`));
  }
}
