// Thin typed client for the retention service. The dashboard performs no
// analytics of its own: every number it shows came out of these calls.

import type {
  ApiErrorBody,
  ContributorDetail,
  DistributionPayload,
  InactiveRow,
  Lens,
  ModelPayload,
  NewcomerRow,
  OverviewPayload,
  RiskRow,
  SurvivalPayload,
  TagProfilePayload,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private token: string | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  get authenticated(): boolean {
    return this.token !== null;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload as ApiErrorBody);
    }
    return payload as T;
  }

  async login(login: string, password: string): Promise<void> {
    const session = await this.request<{ token: string }>("POST", "/api/auth/login", {
      login,
      password,
    });
    this.token = session.token;
  }

  signup(login: string, password: string) {
    return this.request<{ account_id: string; role: string }>(
      "POST", "/api/auth/signup", { login, password },
    );
  }

  overview(project: string): Promise<OverviewPayload> {
    return this.request("GET", `/api/projects/${project}/overview`);
  }

  distribution(project: string, lens: Lens): Promise<DistributionPayload> {
    return this.request("GET", `/api/projects/${project}/distribution?lens=${lens}`);
  }

  survival(project: string, groupBy: Lens | null): Promise<SurvivalPayload> {
    const query = groupBy ? `?group_by=${groupBy}` : "";
    return this.request("GET", `/api/projects/${project}/survival${query}`);
  }

  fitModel(
    project: string,
    draft: { kind: string; features: string[]; seed: number },
  ): Promise<ModelPayload> {
    return this.request("POST", `/api/projects/${project}/models`, {
      kind: draft.kind,
      features: draft.features,
      seed: draft.seed,
    });
  }

  model(modelId: string): Promise<ModelPayload> {
    return this.request("GET", `/api/models/${modelId}`);
  }

  risk(modelId: string): Promise<RiskRow[]> {
    return this.request("GET", `/api/models/${modelId}/risk`);
  }

  contributor(project: string, contributorId: string): Promise<ContributorDetail> {
    return this.request(
      "GET", `/api/projects/${project}/contributors/${contributorId}`,
    );
  }

  tags(project: string): Promise<TagProfilePayload[]> {
    return this.request("GET", `/api/projects/${project}/tags`);
  }

  newcomers(project: string): Promise<NewcomerRow[]> {
    return this.request("GET", `/api/projects/${project}/newcomers`);
  }

  inactive(project: string): Promise<InactiveRow[]> {
    return this.request("GET", `/api/projects/${project}/inactive`);
  }
}

export type AuthScreen = "login" | "awaiting-approval";

/** 401 sends the user to the login screen, 403 to the approval notice;
 * anything else is not an auth condition and surfaces as an error panel. */
export function screenForAuthError(error: ApiError): AuthScreen | null {
  if (error.status === 401) return "login";
  if (error.status === 403) return "awaiting-approval";
  return null;
}
