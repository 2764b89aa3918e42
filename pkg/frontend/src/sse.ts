// Incremental server-sent-events parser. The stream endpoint emits blocks of
// the form
//
//   id: 17
//   event: telemetry
//   data: {...}
//
// separated by blank lines, plus keep-alive blocks with "data: {}" and a
// final "event: end" block when the session is finished and drained.

export interface SseMessage {
  id?: string;
  event?: string;
  data: string;
}

export class SseParser {
  private buffer = '';

  /** Feed a chunk of text; returns every complete message it closed. */
  push(chunk: string): SseMessage[] {
    this.buffer += chunk;
    const out: SseMessage[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf('\n\n')) >= 0) {
      const block = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 2);
      const msg = parseBlock(block);
      if (msg) out.push(msg);
    }
    return out;
  }
}

function parseBlock(block: string): SseMessage | null {
  let id: string | undefined;
  let event: string | undefined;
  const data: string[] = [];
  for (const rawLine of block.split('\n')) {
    const line = rawLine.replace(/\r$/, '');
    if (!line || line.startsWith(':')) continue;
    const colon = line.indexOf(':');
    if (colon < 0) continue;
    const field = line.slice(0, colon);
    const value = line.slice(colon + 1).replace(/^ /, '');
    if (field === 'id') id = value;
    else if (field === 'event') event = value;
    else if (field === 'data') data.push(value);
  }
  if (id === undefined && event === undefined && data.length === 0) return null;
  return { id, event, data: data.join('\n') };
}
