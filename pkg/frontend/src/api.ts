import type {
  ApplyPayload,
  ExplanationPayload,
  PlanPayload,
  QueryPayload,
  ServiceError,
  StatePayload,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public payload: ServiceError,
  ) {
    super(`${payload.code}: ${payload.message}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, body as ServiceError);
  }
  return body as T;
}

/** Thin client over the session endpoints; one instance per session. */
export class DispatchApi {
  sessionId: string | null = null;

  constructor(public baseUrl: string = "") {}

  async createSession(scenario: unknown, params?: Record<string, number>): Promise<string> {
    const body = await request<{ id: string }>(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: JSON.stringify({ scenario, params }),
    });
    this.sessionId = body.id;
    return body.id;
  }

  private path(suffix: string): string {
    if (!this.sessionId) throw new Error("no session created yet");
    return `${this.baseUrl}/sessions/${this.sessionId}${suffix}`;
  }

  plan(): Promise<PlanPayload> {
    return request<PlanPayload>(this.path("/plan"), { method: "POST", body: "{}" });
  }

  async submitQueries(queries: QueryPayload[]): Promise<ExplanationPayload[]> {
    const body = await request<{ explanations: ExplanationPayload[] }>(this.path("/queries"), {
      method: "POST",
      body: JSON.stringify({ queries }),
    });
    return body.explanations;
  }

  apply(overrideVehicle?: number, force = false): Promise<ApplyPayload> {
    const body: Record<string, unknown> = { force };
    if (overrideVehicle !== undefined) body.override_vehicle = overrideVehicle;
    return request<ApplyPayload>(this.path("/apply"), {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  state(): Promise<StatePayload> {
    return request<StatePayload>(this.path("/state"));
  }

  tree(): Promise<unknown> {
    return request<unknown>(this.path("/tree"));
  }
}
