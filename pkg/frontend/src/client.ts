import { SseParser } from './sse.js';
import type {
  ActionAck,
  ActionRequest,
  Alarm,
  QueryResult,
  SessionSnapshot,
  StreamEvent,
  TelemetryRecord,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export interface CreateSessionOptions {
  scenario?: 'reference' | 'default';
  seed?: number;
  noise?: boolean;
  duration?: number;
  ticks_per_second?: number;
}

export interface StreamHandle {
  stop(): void;
  done: Promise<void>;
}

/** Thin wrapper over the plantguard service; fetch is injectable for tests. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    if (!resp.ok) {
      let detail = text;
      try {
        detail = (JSON.parse(text) as { detail?: string }).detail ?? text;
      } catch {
        // non-JSON error body, keep raw text
      }
      throw new ApiError(resp.status, detail);
    }
    return JSON.parse(text) as T;
  }

  createSession(opts: CreateSessionOptions = {}): Promise<SessionSnapshot> {
    return this.request('/sessions', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(opts),
    });
  }

  getSession(id: string): Promise<SessionSnapshot> {
    return this.request(`/sessions/${id}`);
  }

  postAction(id: string, action: ActionRequest): Promise<ActionAck> {
    return this.request(`/sessions/${id}/actions`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(action),
    });
  }

  getTelemetry(id: string, since = 0): Promise<{ records: TelemetryRecord[] }> {
    return this.request(`/sessions/${id}/telemetry?since=${since}`);
  }

  getAlarms(id: string): Promise<{ alarms: Alarm[] }> {
    return this.request(`/sessions/${id}/alarms`);
  }

  query(id: string, keywords: string[], maxDepth = 4): Promise<QueryResult> {
    return this.request(`/sessions/${id}/query`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ keywords, max_depth: maxDepth }),
    });
  }

  /**
   * Consume the SSE stream, invoking onEvent per event. Reconnects with the
   * last seen seq on connection loss, so the reducer's dedup only has to
   * cover the overlap window, never a gap.
   */
  stream(
    id: string,
    since: number,
    onEvent: (event: StreamEvent) => void,
    onEnd?: () => void,
  ): StreamHandle {
    let stopped = false;
    let cursor = since;

    const run = async (): Promise<void> => {
      while (!stopped) {
        try {
          const resp = await this.fetchFn(
            `${this.baseUrl}/sessions/${id}/stream?since=${cursor}`,
          );
          if (!resp.ok || !resp.body) throw new ApiError(resp.status, 'stream failed');
          const reader = resp.body.getReader();
          const decoder = new TextDecoder();
          const parser = new SseParser();
          for (;;) {
            const { done, value } = await reader.read();
            if (done) break;
            for (const msg of parser.push(decoder.decode(value, { stream: true }))) {
              if (msg.event === 'end') {
                onEnd?.();
                return;
              }
              if (!msg.data || msg.data === '{}') continue;
              const event = JSON.parse(msg.data) as StreamEvent;
              cursor = Math.max(cursor, event.seq);
              onEvent(event);
            }
            if (stopped) return;
          }
        } catch {
          if (stopped) return;
        }
        // brief backoff before reconnecting from the cursor
        await new Promise((r) => setTimeout(r, 250));
      }
    };

    const done = run();
    return {
      stop() {
        stopped = true;
      },
      done,
    };
  }
}
