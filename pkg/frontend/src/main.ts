import { ApiClient } from './client.js';
import {
  CHANNELS,
  applyEvent,
  initialState,
  setSnapshot,
  type Channel,
  type ConsoleState,
} from './state.js';
import { alarmTable, chartView, graphView, statusLine } from './view.js';

// Browser entry point. All state transitions go through state.ts and all
// render data comes from view.ts; this file just pushes pixels and wires
// buttons to API calls.

const baseUrl = (window as unknown as { PLANTGUARD_URL?: string }).PLANTGUARD_URL
  ?? 'http://127.0.0.1:8000';
const client = new ApiClient(baseUrl);
const state: ConsoleState = initialState();
let sessionId: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function drawChart(canvas: HTMLCanvasElement, channel: Channel): void {
  const view = chartView(state, channel);
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (view.points.length < 2) return;
  const ts = view.points.map((p) => p[0]);
  const vs = view.points.map((p) => p[1]);
  const t0 = ts[0];
  const t1 = ts[ts.length - 1];
  let vmin = Math.min(...vs);
  let vmax = Math.max(...vs);
  for (const line of view.hlines) {
    vmin = Math.min(vmin, line.value);
    vmax = Math.max(vmax, line.value);
  }
  const pad = (vmax - vmin || 1) * 0.05;
  vmin -= pad;
  vmax += pad;
  const px = (t: number): number => ((t - t0) / (t1 - t0 || 1)) * width;
  const py = (v: number): number => height - ((v - vmin) / (vmax - vmin)) * height;

  ctx.strokeStyle = '#888';
  ctx.setLineDash([4, 4]);
  for (const line of view.hlines) {
    ctx.beginPath();
    ctx.moveTo(0, py(line.value));
    ctx.lineTo(width, py(line.value));
    ctx.stroke();
  }
  ctx.setLineDash([]);
  ctx.strokeStyle = '#0b62a4';
  ctx.beginPath();
  view.points.forEach(([t, v], i) => {
    if (i === 0) ctx.moveTo(px(t), py(v));
    else ctx.lineTo(px(t), py(v));
  });
  ctx.stroke();
  ctx.fillStyle = '#222';
  ctx.fillText(`${channel}: ${view.latest?.toFixed(3) ?? '-'}`, 6, 12);
}

function renderAlarms(): void {
  const tbody = el<HTMLTableSectionElement>('alarm-rows');
  tbody.innerHTML = '';
  for (const row of alarmTable(state)) {
    const tr = document.createElement('tr');
    tr.className = row.acknowledged ? 'acked' : `sev-${row.severity}`;
    tr.innerHTML = `<td>${row.t}</td><td>${row.text}</td><td>${row.severity}</td>`;
    const td = document.createElement('td');
    if (!row.acknowledged) {
      const btn = document.createElement('button');
      btn.textContent = 'ack';
      btn.onclick = () => {
        void sendAction({ kind: 'acknowledge_alarm', alarm_id: row.id });
      };
      td.appendChild(btn);
    }
    tr.appendChild(td);
    tbody.appendChild(tr);
  }
}

function renderGraph(): void {
  const svg = el<HTMLElement>('graph');
  if (!state.lastQuery) {
    svg.innerHTML = '';
    return;
  }
  const view = graphView(state.lastQuery);
  const parts: string[] = [];
  const pos = new Map(view.nodes.map((n) => [n.id, n]));
  for (const e of view.edges) {
    const a = pos.get(e.head);
    const b = pos.get(e.tail);
    if (!a || !b) continue;
    const stroke = e.onChain ? '#d62728' : '#bbb';
    const w = e.onChain ? 2.5 : 1;
    parts.push(
      `<line x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}" ` +
        `stroke="${stroke}" stroke-width="${w}"/>`,
    );
  }
  for (const n of view.nodes) {
    const fill = n.highlighted ? '#d62728' : n.kind === 'treatment' ? '#2ca02c' : '#1f77b4';
    const r = n.isSeed ? 9 : 6;
    parts.push(`<circle cx="${n.x}" cy="${n.y}" r="${r}" fill="${fill}"/>`);
    parts.push(
      `<text x="${n.x + 10}" y="${n.y + 4}" font-size="10">${n.label}</text>`,
    );
  }
  svg.innerHTML = parts.join('');

  const recs = el<HTMLOListElement>('recommendations');
  recs.innerHTML = '';
  for (const r of view.recommendations) {
    const li = document.createElement('li');
    li.textContent = `${r.treatment.replace('treatment:', '')} (score ${r.score.toFixed(2)})`;
    recs.appendChild(li);
  }
}

function render(): void {
  el<HTMLDivElement>('status').textContent = statusLine(state);
  for (const ch of CHANNELS) {
    drawChart(el<HTMLCanvasElement>(`chart-${ch}`), ch);
  }
  renderAlarms();
  renderGraph();
  el<HTMLPreElement>('log').textContent = state.log.slice(-20).join('\n');
}

async function sendAction(action: Parameters<ApiClient['postAction']>[1]): Promise<void> {
  if (!sessionId) return;
  try {
    await client.postAction(sessionId, action);
  } catch (err) {
    state.log.push(`action failed: ${String(err)}`);
  }
  if (sessionId) setSnapshot(state, await client.getSession(sessionId));
  render();
}

async function start(): Promise<void> {
  const snap = await client.createSession({
    scenario: 'reference',
    seed: 0,
    ticks_per_second: 20,
  });
  sessionId = snap.session_id;
  setSnapshot(state, snap);
  render();

  client.stream(
    snap.session_id,
    state.lastSeq,
    (event) => {
      applyEvent(state, event);
    },
    () => {
      state.log.push('session stream ended');
    },
  );
  await client.postAction(snap.session_id, { kind: 'resume' });

  // redraw on a timer instead of per event; telemetry arrives fast
  window.setInterval(() => {
    void (async () => {
      if (sessionId) setSnapshot(state, await client.getSession(sessionId));
      render();
    })();
  }, 500);
}

function wireButtons(): void {
  el<HTMLButtonElement>('btn-start').onclick = () => {
    void start();
  };
  el<HTMLButtonElement>('btn-pause').onclick = () => {
    void sendAction({ kind: 'pause' });
  };
  el<HTMLButtonElement>('btn-resume').onclick = () => {
    void sendAction({ kind: 'resume' });
  };
  el<HTMLButtonElement>('btn-heater').onclick = () => {
    void sendAction({ kind: 'turn_off_heater' });
  };
  el<HTMLButtonElement>('btn-coolant').onclick = () => {
    const value = Number(el<HTMLInputElement>('coolant-target').value);
    void sendAction({ kind: 'set_coolant_valve', target: value });
  };
}

if (typeof document !== 'undefined' && document.readyState !== 'loading') {
  wireButtons();
} else if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', wireButtons);
}
