import type { GraphNode, GraphTriple } from './types.js';

// Small deterministic force layout. No randomness: initial positions come
// from a hash of the node id, and the solver runs a fixed number of
// iterations, so the same sub-graph always lands in the same spots and
// snapshot tests stay stable.

export interface PlacedNode extends GraphNode {
  x: number;
  y: number;
}

export interface LayoutOptions {
  width?: number;
  height?: number;
  iterations?: number;
}

function hash32(s: string): number {
  // FNV-1a
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export function layoutGraph(
  nodes: GraphNode[],
  triples: GraphTriple[],
  opts: LayoutOptions = {},
): PlacedNode[] {
  const width = opts.width ?? 800;
  const height = opts.height ?? 600;
  const iterations = opts.iterations ?? 120;
  const n = nodes.length;
  if (n === 0) return [];

  const index = new Map<string, number>();
  nodes.forEach((node, i) => index.set(node.id, i));
  const xs = new Float64Array(n);
  const ys = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const h = hash32(nodes[i].id);
    xs[i] = ((h & 0xffff) / 0xffff) * width;
    ys[i] = (((h >>> 16) & 0xffff) / 0xffff) * height;
  }

  const edges: Array<[number, number]> = [];
  for (const t of triples) {
    const a = index.get(t.head);
    const b = index.get(t.tail);
    if (a !== undefined && b !== undefined && a !== b) edges.push([a, b]);
  }

  const area = width * height;
  const k = Math.sqrt(area / n); // ideal edge length (Fruchterman-Reingold)
  const dx = new Float64Array(n);
  const dy = new Float64Array(n);

  for (let iter = 0; iter < iterations; iter++) {
    dx.fill(0);
    dy.fill(0);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let vx = xs[i] - xs[j];
        let vy = ys[i] - ys[j];
        let d2 = vx * vx + vy * vy;
        if (d2 < 1e-4) {
          // identical positions: nudge along a deterministic direction
          vx = ((i - j) % 7) + 0.1;
          vy = ((i + j) % 5) + 0.1;
          d2 = vx * vx + vy * vy;
        }
        const d = Math.sqrt(d2);
        const rep = (k * k) / d;
        dx[i] += (vx / d) * rep;
        dy[i] += (vy / d) * rep;
        dx[j] -= (vx / d) * rep;
        dy[j] -= (vy / d) * rep;
      }
    }
    for (const [a, b] of edges) {
      const vx = xs[a] - xs[b];
      const vy = ys[a] - ys[b];
      const d = Math.sqrt(vx * vx + vy * vy) || 1e-2;
      const att = (d * d) / k;
      dx[a] -= (vx / d) * att;
      dy[a] -= (vy / d) * att;
      dx[b] += (vx / d) * att;
      dy[b] += (vy / d) * att;
    }
    const temp = (0.1 * Math.min(width, height) * (iterations - iter)) / iterations;
    for (let i = 0; i < n; i++) {
      const len = Math.sqrt(dx[i] * dx[i] + dy[i] * dy[i]) || 1e-9;
      const step = Math.min(len, temp);
      xs[i] = Math.min(width, Math.max(0, xs[i] + (dx[i] / len) * step));
      ys[i] = Math.min(height, Math.max(0, ys[i] + (dy[i] / len) * step));
    }
  }

  return nodes.map((node, i) => ({ ...node, x: xs[i], y: ys[i] }));
}
