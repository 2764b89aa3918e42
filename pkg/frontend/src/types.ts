// Payload shapes of the plantguard HTTP API. Field names mirror the JSON
// emitted by the service exactly; keep in sync with the endpoint docs.

export interface TelemetryRecord {
  t: number;
  coolant_temp: number;
  tank_temp: number;
  tank_conc: number;
  feed_temp: number;
}

export type Severity = 'warning' | 'alarm';

export interface Alarm {
  id: string;
  t: number;
  channel: string;
  chart: string; // mean | s | trend | setpoint
  value: number;
  limit: number;
  severity: Severity;
  acknowledged: boolean;
}

export interface SessionSnapshot {
  session_id: string;
  tick: number;
  paused: boolean;
  finished: boolean;
  duration: number;
  state: { c_a: number; temp: number };
  alarm_count: number;
  unacknowledged: number;
  action_count: number;
}

export interface GraphNode {
  id: string;
  kind: 'event' | 'worker' | 'hazard' | 'risk' | 'treatment';
  label: string;
  slots: Record<string, string>;
}

export interface GraphTriple {
  head: string;
  relation: string;
  tail: string;
}

export interface Recommendation {
  treatment: string;
  anchor: string;
  score: number;
  chain: string[];
}

export interface QueryResult {
  seeds: string[];
  nodes: GraphNode[];
  triples: GraphTriple[];
  chains: string[][];
  recommendations: Recommendation[];
}

export type ActionKind =
  | 'turn_off_heater'
  | 'set_coolant_valve'
  | 'acknowledge_alarm'
  | 'pause'
  | 'resume';

export interface ActionRequest {
  kind: ActionKind;
  target?: number;
  alarm_id?: string;
}

export interface ActionAck {
  kind: ActionKind;
  issued_at: number;
  ok: boolean;
  target?: number;
  notice?: string;
  alarm_id?: string;
}

// One entry on the session event stream. `payload` depends on `type`.
export interface StreamEvent {
  seq: number;
  type: 'telemetry' | 'alarm' | 'query' | 'action' | 'log';
  tick: number;
  payload: Record<string, unknown>;
}
