// Thin typed client over the service routes. Every non-2xx response carries
// {error, detail}; requestError turns that into a thrown ServiceError so view
// code can surface the server's own message inline.

import type {
  ApiError,
  SessionRecordDoc,
  SourceDescriptor,
  StopSummary,
  UploadReceiptWire,
} from './types.js';

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

async function throwServiceError(response: Response): Promise<never> {
  let code = `HTTP${response.status}`;
  let detail = response.statusText;
  try {
    const body = (await response.json()) as ApiError;
    if (body.error) {
      code = body.error;
      detail = body.detail ?? detail;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ServiceError(response.status, code, detail);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    // wrapped so the call never carries an illegal `this` in browsers
    readonly fetchImpl: typeof fetch = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      await throwServiceError(response);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  createSession(entry: {
    pseudonym: string;
    age: number;
    sex: string;
    self_reported_condition: string;
  }): Promise<{ session_id: string }> {
    return this.post('/sessions', entry);
  }

  listDevices(): Promise<SourceDescriptor[]> {
    return this.request('/devices');
  }

  attach(sessionId: string, source: SourceDescriptor): Promise<{ state: string }> {
    return this.post(`/sessions/${sessionId}/attach`, source);
  }

  stop(sessionId: string): Promise<StopSummary> {
    return this.post(`/sessions/${sessionId}/stop`);
  }

  getSession(sessionId: string): Promise<SessionRecordDoc> {
    return this.request(`/sessions/${sessionId}`);
  }

  upload(sessionId: string): Promise<UploadReceiptWire> {
    return this.post(`/sessions/${sessionId}/upload`);
  }

  liveUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/live`;
  }
}
