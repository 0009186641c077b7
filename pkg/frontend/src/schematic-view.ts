/** Display model for the schematic DOT artifact.
 *
 * This is a rendering-only reading of the record-label dialect the service
 * emits; all validation already happened server-side.  Nodes are laid out
 * left to right by connectivity depth and edges that interleave are marked
 * so the page can highlight the crossings called out in the refinement
 * trace.
 */

export interface SchematicNodeView {
  id: string;
  cell: string;
  westPorts: string[];
  eastPorts: string[];
  column: number;
  row: number;
}

export interface SchematicEdgeView {
  from: { node: string; port: string };
  to: { node: string; port: string };
  crossing: boolean;
}

export interface SchematicView {
  nodes: SchematicNodeView[];
  edges: SchematicEdgeView[];
  crossingCount: number;
}

const NODE_RE =
  /^\s*(\w+)\s*\[label="\{\{([^}]*)\}\s*\|\s*\w+:\s*([\w-]+)\s*\|\s*\{([^}]*)\}\}"\];?\s*$/;
const EDGE_RE = /^\s*(\w+):(\w+)\s*--\s*(\w+):(\w+);?\s*$/;

function parsePorts(group: string): string[] {
  return group
    .split("|")
    .map((field) => field.trim())
    .filter((field) => field.length > 0)
    .map((field) => {
      const m = /^<(\w+)>\s*(\w+)$/.exec(field);
      return m ? m[1]! : field;
    });
}

export function buildSchematicView(dotText: string): SchematicView {
  const nodes = new Map<string, SchematicNodeView>();
  const edges: SchematicEdgeView[] = [];

  for (const line of dotText.split("\n")) {
    const nodeMatch = NODE_RE.exec(line);
    if (nodeMatch) {
      const [, id, west, cell, east] = nodeMatch;
      nodes.set(id!, {
        id: id!,
        cell: cell!,
        westPorts: parsePorts(west!),
        eastPorts: parsePorts(east!),
        column: 0,
        row: 0,
      });
      continue;
    }
    const edgeMatch = EDGE_RE.exec(line);
    if (edgeMatch) {
      const [, a, ap, b, bp] = edgeMatch;
      edges.push({
        from: { node: a!, port: ap! },
        to: { node: b!, port: bp! },
        crossing: false,
      });
    }
  }

  assignColumns(nodes, edges);
  const crossingCount = markCrossings(nodes, edges);

  return { nodes: [...nodes.values()], edges, crossingCount };
}

function assignColumns(
  nodes: Map<string, SchematicNodeView>,
  edges: SchematicEdgeView[],
): void {
  // longest-path depth from the driving side; edges always run west->east
  let changed = true;
  let guard = nodes.size + 1;
  while (changed && guard-- > 0) {
    changed = false;
    for (const e of edges) {
      const from = nodes.get(e.from.node);
      const to = nodes.get(e.to.node);
      if (!from || !to) continue;
      if (to.column < from.column + 1) {
        to.column = from.column + 1;
        changed = true;
      }
    }
  }
  const perColumn = new Map<number, number>();
  for (const node of nodes.values()) {
    const row = perColumn.get(node.column) ?? 0;
    node.row = row;
    perColumn.set(node.column, row + 1);
  }
}

/** A port's vertical slot within its column, for interleave testing. */
function portY(node: SchematicNodeView, port: string, east: boolean): number {
  const ports = east ? node.eastPorts : node.westPorts;
  const idx = ports.indexOf(port);
  return node.row * 100 + (idx >= 0 ? idx : ports.length) * 10;
}

function markCrossings(
  nodes: Map<string, SchematicNodeView>,
  edges: SchematicEdgeView[],
): number {
  let pairs = 0;
  for (let i = 0; i < edges.length; i += 1) {
    for (let j = i + 1; j < edges.length; j += 1) {
      const a = edges[i]!;
      const b = edges[j]!;
      const af = nodes.get(a.from.node);
      const at = nodes.get(a.to.node);
      const bf = nodes.get(b.from.node);
      const bt = nodes.get(b.to.node);
      if (!af || !at || !bf || !bt) continue;
      if (af.column !== bf.column || at.column !== bt.column) continue;
      const a0 = portY(af, a.from.port, true);
      const a1 = portY(at, a.to.port, false);
      const b0 = portY(bf, b.from.port, true);
      const b1 = portY(bt, b.to.port, false);
      if ((a0 - b0) * (a1 - b1) < 0) {
        a.crossing = true;
        b.crossing = true;
        pairs += 1;
      }
    }
  }
  return pairs;
}
