/** Typed client for the three service endpoints. The fetch implementation is
 * injectable so tests can run against a faithful stub. */

import type { LandscapeResponse, ModelInfo, SampleRequest, SampleResponse } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch.bind(globalThis),
  ) {}

  private async json<T>(url: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + url, init);
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, body?.error ?? `HTTP ${resp.status}`);
    }
    return body as T;
  }

  modelInfo(): Promise<ModelInfo> {
    return this.json<ModelInfo>("/model/info");
  }

  landscape(): Promise<LandscapeResponse> {
    return this.json<LandscapeResponse>("/landscape");
  }

  sample(req: SampleRequest): Promise<SampleResponse> {
    return this.json<SampleResponse>("/sample", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }
}
