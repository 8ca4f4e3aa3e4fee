// Live event subscription: newline-delimited JSON over a kept-open fetch
// response (the service does not use SSE framing). Detects sequence gaps,
// and reconnects with a fresh subscription while the session is recording.

import type { LiveEventWire } from './types.js';

export interface StreamHandlers {
  onEvent(event: LiveEventWire): void;
  /** seq jumped; `missed` events were dropped server-side for this client */
  onGap?(missed: number): void;
  /** stream ended and will not be retried (session terminal or unsubscribed) */
  onClose?(): void;
  onReconnect?(attempt: number): void;
}

export interface StreamOptions {
  fetchImpl?: typeof fetch;
  /** async predicate: should we resubscribe after the stream drops? */
  shouldReconnect?: () => Promise<boolean>;
  reconnectDelayMs?: number;
}

export interface Subscription {
  close(): void;
}

export function subscribeLive(
  url: string,
  handlers: StreamHandlers,
  options: StreamOptions = {},
): Subscription {
  const fetchImpl = options.fetchImpl ?? ((input: RequestInfo | URL, init?: RequestInit) => globalThis.fetch(input, init));
  const delayMs = options.reconnectDelayMs ?? 1000;
  const controller = new AbortController();
  let lastSeq = 0;
  let closed = false;

  async function readOnce(): Promise<void> {
    const response = await fetchImpl(url, { signal: controller.signal });
    if (!response.ok || !response.body) {
      throw new Error(`live stream failed: HTTP ${response.status}`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = '';
    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        return;
      }
      buffer += decoder.decode(value, { stream: true });
      const lines = buffer.split('\n');
      buffer = lines.pop() ?? '';
      for (const line of lines) {
        if (!line.trim()) {
          continue;
        }
        const event = JSON.parse(line) as LiveEventWire;
        if (lastSeq > 0 && event.seq > lastSeq + 1) {
          handlers.onGap?.(event.seq - lastSeq - 1);
        }
        lastSeq = event.seq;
        handlers.onEvent(event);
      }
    }
  }

  (async () => {
    let attempt = 0;
    for (;;) {
      try {
        await readOnce();
      } catch {
        if (closed) {
          break;
        }
      }
      if (closed) {
        break;
      }
      const retry = options.shouldReconnect ? await options.shouldReconnect() : false;
      if (!retry) {
        break;
      }
      attempt += 1;
      handlers.onReconnect?.(attempt);
      await new Promise((resolve) => setTimeout(resolve, delayMs));
      if (closed) {
        break;
      }
    }
    if (!closed) {
      closed = true;
      handlers.onClose?.();
    }
  })();

  return {
    close() {
      closed = true;
      controller.abort();
    },
  };
}
