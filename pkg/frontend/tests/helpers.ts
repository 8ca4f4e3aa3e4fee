// Test doubles: a scriptable fetch and a hand-driven NDJSON event stream.

import type { LiveEventWire } from '../src/types.js';

export class MockEventStream {
  private controller: ReadableStreamDefaultController<Uint8Array> | null = null;
  readonly response: Response;

  constructor() {
    const encoder = new TextEncoder();
    const self = this;
    const body = new ReadableStream<Uint8Array>({
      start(controller) {
        self.controller = controller;
      },
    });
    this.response = new Response(body, { status: 200 });
    this.encode = (line: string) => encoder.encode(line);
  }

  private encode: (line: string) => Uint8Array;

  /** raw bytes, for chunk-splitting tests */
  push(text: string): void {
    this.controller?.enqueue(this.encode(text));
  }

  emit(event: Partial<LiveEventWire> & { seq: number }): void {
    const full: LiveEventWire = {
      session_id: 's1',
      elapsed_s: event.seq,
      hr_bpm: 60,
      beat_count: event.seq,
      signal: 'ok',
      ...event,
    };
    this.controller?.enqueue(this.encode(JSON.stringify(full) + '\n'));
  }

  end(): void {
    this.controller?.close();
  }
}

export type RouteHandler = (init?: RequestInit) => Response | Promise<Response>;

/** fetch double keyed by "METHOD path"; unknown routes 404. */
export function scriptedFetch(routes: Record<string, RouteHandler>): typeof fetch {
  return async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = new URL(String(input), 'http://test.local');
    const key = `${init?.method ?? 'GET'} ${url.pathname}`;
    const handler = routes[key];
    if (!handler) {
      return Response.json({ error: 'NotFound', detail: `no route ${key}` }, { status: 404 });
    }
    return handler(init);
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return Response.json(body, { status });
}

export async function until(
  predicate: () => boolean,
  timeoutMs = 3000,
  stepMs = 5,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) {
      throw new Error('condition not reached in time');
    }
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
}
