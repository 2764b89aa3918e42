import type {
  Alarm,
  QueryResult,
  SessionSnapshot,
  StreamEvent,
  TelemetryRecord,
} from './types.js';

// Keep at most this many points per channel; the console only ever plots the
// recent past, and sessions can run indefinitely.
export const MAX_POINTS = 1000;
export const MAX_LOG_LINES = 200;

export const CHANNELS = ['coolant_temp', 'tank_temp', 'tank_conc', 'feed_temp'] as const;
export type Channel = (typeof CHANNELS)[number];

export interface SeriesBuffer {
  t: number[];
  v: number[];
}

export interface ConsoleState {
  snapshot: SessionSnapshot | null;
  series: Record<Channel, SeriesBuffer>;
  alarms: Alarm[];
  /** Latest auto-query result pushed by the service, if any. */
  lastQuery: QueryResult | null;
  lastQueryAlarmId: string | null;
  log: string[];
  /** Highest event seq applied; reconnect the stream from here. */
  lastSeq: number;
  droppedEvents: number;
}

export function initialState(): ConsoleState {
  const series = {} as Record<Channel, SeriesBuffer>;
  for (const ch of CHANNELS) series[ch] = { t: [], v: [] };
  return {
    snapshot: null,
    series,
    alarms: [],
    lastQuery: null,
    lastQueryAlarmId: null,
    log: [],
    lastSeq: 0,
    droppedEvents: 0,
  };
}

function pushBounded(buf: SeriesBuffer, t: number, v: number): void {
  buf.t.push(t);
  buf.v.push(v);
  if (buf.t.length > MAX_POINTS) {
    buf.t.splice(0, buf.t.length - MAX_POINTS);
    buf.v.splice(0, buf.v.length - MAX_POINTS);
  }
}

function appendLog(state: ConsoleState, line: string): void {
  state.log.push(line);
  if (state.log.length > MAX_LOG_LINES) {
    state.log.splice(0, state.log.length - MAX_LOG_LINES);
  }
}

/**
 * Apply one stream event in place. Events at or below lastSeq are duplicates
 * from a reconnect overlap and are dropped, so replaying a window of the
 * stream is always safe.
 */
export function applyEvent(state: ConsoleState, event: StreamEvent): boolean {
  if (event.seq <= state.lastSeq) {
    state.droppedEvents += 1;
    return false;
  }
  state.lastSeq = event.seq;
  switch (event.type) {
    case 'telemetry': {
      const rec = event.payload as unknown as TelemetryRecord;
      for (const ch of CHANNELS) pushBounded(state.series[ch], rec.t, rec[ch]);
      break;
    }
    case 'alarm': {
      const alarm = event.payload as unknown as Alarm;
      if (!state.alarms.some((a) => a.id === alarm.id)) {
        state.alarms.push(alarm);
      }
      appendLog(state, `t=${alarm.t} ${alarm.severity}: ${alarm.channel} ${alarm.chart}`);
      break;
    }
    case 'query': {
      state.lastQuery = event.payload.result as QueryResult;
      state.lastQueryAlarmId = (event.payload.alarm_id as string) ?? null;
      appendLog(state, `query for ${state.lastQueryAlarmId ?? '?'}`);
      break;
    }
    case 'action': {
      const kind = event.payload.kind as string;
      const notice = event.payload.notice as string | undefined;
      appendLog(state, notice ? `${kind}: ${notice}` : `${kind} ok`);
      break;
    }
    case 'log':
      appendLog(state, String(event.payload.message ?? ''));
      break;
  }
  return true;
}

export function applyEvents(state: ConsoleState, events: StreamEvent[]): number {
  let applied = 0;
  for (const e of events) if (applyEvent(state, e)) applied += 1;
  return applied;
}

export function setSnapshot(state: ConsoleState, snap: SessionSnapshot): void {
  state.snapshot = snap;
}

export function acknowledgeLocally(state: ConsoleState, alarmId: string): void {
  const alarm = state.alarms.find((a) => a.id === alarmId);
  if (alarm) alarm.acknowledged = true;
}
