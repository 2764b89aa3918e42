import { layoutGraph, type PlacedNode } from './layout.js';
import type { Channel, ConsoleState } from './state.js';
import type { QueryResult, Recommendation } from './types.js';

// View-model builders. Everything here is plain data so it can be asserted
// in tests; the DOM layer in main.ts only renders these structures.

export interface ChartView {
  channel: Channel;
  points: Array<[number, number]>;
  latest: number | null;
  hlines: Array<{ label: string; value: number }>;
}

const SETPOINT_LINES: Partial<Record<Channel, Array<{ label: string; value: number }>>> = {
  tank_temp: [
    { label: 'setpoint', value: 373 },
    { label: 'alarm', value: 374 },
  ],
  coolant_temp: [
    { label: 'min', value: 276 },
    { label: 'max', value: 322 },
  ],
};

export function chartView(state: ConsoleState, channel: Channel): ChartView {
  const buf = state.series[channel];
  const points: Array<[number, number]> = buf.t.map((t, i) => [t, buf.v[i]]);
  return {
    channel,
    points,
    latest: buf.v.length ? buf.v[buf.v.length - 1] : null,
    hlines: SETPOINT_LINES[channel] ?? [],
  };
}

export interface AlarmRow {
  id: string;
  t: number;
  text: string;
  severity: string;
  acknowledged: boolean;
}

/** Unacknowledged first, newest first within each group. */
export function alarmTable(state: ConsoleState): AlarmRow[] {
  const rows = state.alarms.map((a) => ({
    id: a.id,
    t: a.t,
    text: `${a.channel} ${a.chart} (${a.value.toFixed(2)} vs ${a.limit.toFixed(2)})`,
    severity: a.severity,
    acknowledged: a.acknowledged,
  }));
  rows.sort((a, b) =>
    a.acknowledged === b.acknowledged ? b.t - a.t : a.acknowledged ? 1 : -1,
  );
  return rows;
}

export interface GraphView {
  nodes: Array<PlacedNode & { highlighted: boolean; isSeed: boolean }>;
  edges: Array<{
    head: string;
    tail: string;
    relation: string;
    onChain: boolean;
  }>;
  chain: string[];
  recommendations: Recommendation[];
}

/**
 * Graph panel view: deterministic layout plus highlight flags for the top
 * causal chain. Recommendation order is whatever the service returned; the
 * ranking logic lives server-side and the console must not re-sort it.
 */
export function graphView(result: QueryResult): GraphView {
  const chain = result.chains.length ? result.chains[0] : [];
  const onChain = new Set(chain);
  const seeds = new Set(result.seeds);
  const chainEdges = new Set<string>();
  for (let i = 0; i + 1 < chain.length; i++) {
    chainEdges.add(`${chain[i]}->${chain[i + 1]}`);
  }
  const placed = layoutGraph(result.nodes, result.triples);
  return {
    nodes: placed.map((n) => ({
      ...n,
      highlighted: onChain.has(n.id),
      isSeed: seeds.has(n.id),
    })),
    edges: result.triples.map((t) => ({
      head: t.head,
      tail: t.tail,
      relation: t.relation,
      onChain: t.relation === 'causes' && chainEdges.has(`${t.head}->${t.tail}`),
    })),
    chain,
    recommendations: result.recommendations,
  };
}

export function statusLine(state: ConsoleState): string {
  const s = state.snapshot;
  if (!s) return 'no session';
  const run = s.finished ? 'finished' : s.paused ? 'paused' : 'running';
  return (
    `t=${s.tick}/${s.duration} ${run} | ` +
    `T=${s.state.temp.toFixed(2)} K, C_A=${s.state.c_a.toFixed(3)} | ` +
    `${s.unacknowledged} unacked alarm(s)`
  );
}
