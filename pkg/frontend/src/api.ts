// Typed client for the profiling service. The transport is injectable so
// tests can replay recorded responses without a network.

export interface SchemaFacet {
  name: string;
  size: number;
  values: string[];
}

export interface SchemaResponse {
  schema_version: number;
  model: { kind: string; checkpoint_hash: string };
  facets: SchemaFacet[];
}

export interface ValueProbability {
  value: string;
  probability: number;
}

export interface FacetDistribution {
  values: ValueProbability[];
  other: number;
}

export interface ProfileResponse {
  fixed: Record<string, string>;
  expectations: Record<string, FacetDistribution>;
  model: { kind: string; checkpoint_hash: string };
}

export interface ShiftEntry {
  js_divergence: number;
  top_before: string;
  top_after: string;
  argmax_changed: boolean;
}

export interface ShiftResponse {
  base: Record<string, string>;
  added: Record<string, string>;
  shifts: Record<string, ShiftEntry>;
  expectations: Record<string, FacetDistribution>;
  model: { kind: string; checkpoint_hash: string };
}

export interface TransportResponse {
  status: number;
  json(): Promise<unknown>;
}

export type Transport = (
  path: string,
  init?: { method: string; body: string },
) => Promise<TransportResponse>;

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export function fetchTransport(baseUrl: string): Transport {
  return (path, init) =>
    fetch(baseUrl + path, {
      method: init?.method ?? "GET",
      headers: init ? { "content-type": "application/json" } : undefined,
      body: init?.body,
    });
}

async function unwrap<T>(resp: TransportResponse): Promise<T> {
  const body = (await resp.json()) as Record<string, unknown>;
  if (resp.status !== 200) {
    const message =
      typeof body?.error === "string"
        ? body.error
        : `service error (status ${resp.status})`;
    throw new ServiceError(resp.status, message);
  }
  return body as T;
}

export class ApiClient {
  constructor(private readonly transport: Transport) {}

  async getSchema(): Promise<SchemaResponse> {
    return unwrap(await this.transport("/schema"));
  }

  async profile(known: Record<string, string>): Promise<ProfileResponse> {
    return unwrap(
      await this.transport("/profile", {
        method: "POST",
        body: JSON.stringify({ known }),
      }),
    );
  }

  async shift(
    base: Record<string, string>,
    added: Record<string, string>,
  ): Promise<ShiftResponse> {
    return unwrap(
      await this.transport("/shift", {
        method: "POST",
        body: JSON.stringify({ base, added }),
      }),
    );
  }
}
