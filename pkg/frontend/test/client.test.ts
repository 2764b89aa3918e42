import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/client.js';
import { applyEvent, initialState } from '../src/state.js';
import type { StreamEvent } from '../src/types.js';

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

describe('ApiClient requests', () => {
  it('builds urls and parses json', async () => {
    const calls: Array<[string, RequestInit | undefined]> = [];
    const client = new ApiClient('http://svc:8000', async (url, init) => {
      calls.push([String(url), init]);
      return jsonResponse(200, { records: [] });
    });
    await client.getTelemetry('s1', 990);
    expect(calls[0][0]).toBe('http://svc:8000/sessions/s1/telemetry?since=990');

    await client.query('s1', ['tank temperature', 'high']);
    const body = JSON.parse(String(calls[1][1]?.body));
    expect(body).toEqual({ keywords: ['tank temperature', 'high'], max_depth: 4 });
  });

  it('surfaces the service error detail', async () => {
    const client = new ApiClient('http://svc:8000', async () =>
      jsonResponse(400, { detail: 'session is paused; resume before plant actions' }),
    );
    await expect(
      client.postAction('s1', { kind: 'turn_off_heater' }),
    ).rejects.toThrowError(ApiError);
    await expect(client.postAction('s1', { kind: 'turn_off_heater' })).rejects.toThrow(
      /paused/,
    );
  });
});

function sseBody(blocks: string[]): ReadableStream<Uint8Array> {
  const enc = new TextEncoder();
  let i = 0;
  return new ReadableStream({
    pull(controller) {
      if (i < blocks.length) {
        controller.enqueue(enc.encode(blocks[i]));
        i += 1;
      } else {
        controller.close();
      }
    },
  });
}

function block(event: StreamEvent): string {
  return `id: ${event.seq}\nevent: ${event.type}\ndata: ${JSON.stringify(event)}\n\n`;
}

function tele(seq: number): StreamEvent {
  return {
    seq,
    type: 'telemetry',
    tick: seq,
    payload: { t: seq, coolant_temp: 299, tank_temp: 373, tank_conc: 2, feed_temp: 300 },
  };
}

describe('ApiClient.stream', () => {
  it('reconnects from the cursor with no duplicates or gaps applied', async () => {
    // first connection drops after seq 5; the reconnect replays 4..8 + end
    const urls: string[] = [];
    let connection = 0;
    const client = new ApiClient('http://svc:8000', async (url) => {
      urls.push(String(url));
      connection += 1;
      const blocks =
        connection === 1
          ? [1, 2, 3, 4, 5].map((s) => block(tele(s)))
          : [
              ...[4, 5, 6, 7, 8].map((s) => block(tele(s))),
              'event: end\ndata: {}\n\n',
            ];
      return new Response(sseBody(blocks), {
        status: 200,
        headers: { 'content-type': 'text/event-stream' },
      });
    });

    const state = initialState();
    let ended = false;
    const handle = client.stream(
      's1',
      0,
      (event) => {
        applyEvent(state, event);
      },
      () => {
        ended = true;
      },
    );
    await handle.done;

    expect(ended).toBe(true);
    expect(urls[0]).toContain('/stream?since=0');
    expect(urls[1]).toContain('/stream?since=5');
    expect(state.series.tank_temp.t).toEqual([1, 2, 3, 4, 5, 6, 7, 8]);
    expect(state.droppedEvents).toBe(2); // the 4,5 overlap from the replay
  });

  it('stop() ends the loop', async () => {
    const client = new ApiClient('http://svc:8000', async () => {
      return new Response(sseBody(['event: end\ndata: {}\n\n']), { status: 200 });
    });
    const handle = client.stream('s1', 0, () => {});
    handle.stop();
    await handle.done;
  });
});
