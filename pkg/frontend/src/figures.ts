/** Figure builders for the simulator's metrics CSV and the monitor trace CSV.
 *
 * Each figure kind plots columns that already exist in the input file; no
 * statistics are recomputed here. Output is a deterministic standalone SVG.
 */

import { num, parseCsv, requireColumns, SchemaError, Table } from "./csv.js";
import * as svg from "./svg.js";

export const FIGURE_KINDS = [
  "trace", "bias_vs_d", "coverage_vs_d", "nratio_vs_d",
  "bias_vs_tau", "power_vs_tau", "nratio_vs_tau",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  csvText: string;
  /** one panel per DGP (default) vs everything in a single panel */
  panelPerDgp?: boolean;
  /** confidence level for the coverage reference line (default 0.1) */
  alpha?: number;
  /** optional variance threshold line on the trace figure's top panel */
  threshold?: number;
}

interface MetricsKindConfig {
  ycol: string;
  xlabel: string;
  ylabel: string;
  refY?: (spec: FigureSpec) => number | undefined;
}

const METRICS_KINDS: Record<Exclude<FigureKind, "trace">, MetricsKindConfig> = {
  bias_vs_d: { ycol: "bias", xlabel: "d", ylabel: "bias", refY: () => 0 },
  coverage_vs_d: {
    ycol: "coverage", xlabel: "d", ylabel: "coverage",
    refY: (s) => 1 - (s.alpha ?? 0.1),
  },
  nratio_vs_d: {
    ycol: "mean_n_ratio", xlabel: "d", ylabel: "E(N) / reference N",
    refY: () => 1,
  },
  bias_vs_tau: { ycol: "bias", xlabel: "tau_h1", ylabel: "bias", refY: () => 0 },
  power_vs_tau: { ycol: "rejection_rate", xlabel: "tau_h1", ylabel: "power" },
  nratio_vs_tau: {
    ycol: "mean_n_ratio", xlabel: "tau_h1", ylabel: "E(N) / n_max",
    refY: () => 1,
  },
};

const PANEL_W = 320;
const PANEL_H = 230;
const MARGIN = { left: 52, right: 14, top: 30, bottom: 38 };
const LEGEND_H = 24;

interface Point {
  x: number;
  y: number;
}

interface Panel {
  title: string;
  series: Map<string, Point[]>;
}

function groupMetrics(table: Table, ycol: string,
                      panelPerDgp: boolean): Panel[] {
  // first pass: (panel, base series, x) -> entries, keeping n_max so that a
  // grid swept at several n_max caps splits into one series per cap ordinal
  // rather than a zig-zag line (the cap itself varies with the grid value)
  type Entry = { y: number; nmax: number };
  const groups = new Map<string, Map<string, Map<number, Entry[]>>>();
  for (const row of table.rows) {
    const panelKey = panelPerDgp ? `DGP ${row.dgp}` : "all DGPs";
    const base = panelPerDgp ? row.rule : `${row.rule} (dgp ${row.dgp})`;
    if (!groups.has(panelKey)) groups.set(panelKey, new Map());
    const byBase = groups.get(panelKey)!;
    if (!byBase.has(base)) byBase.set(base, new Map());
    const byX = byBase.get(base)!;
    const x = num(row.grid);
    if (!byX.has(x)) byX.set(x, []);
    byX.get(x)!.push({ y: num(row[ycol]), nmax: num(row.n_max ?? "nan") });
  }
  const panels: Panel[] = [];
  for (const [panelKey, byBase] of groups) {
    const panel: Panel = { title: panelKey, series: new Map() };
    for (const [base, byX] of byBase) {
      const caps = Math.max(...[...byX.values()].map((e) => e.length));
      for (const [x, entries] of byX) {
        entries.sort((a, b) => a.nmax - b.nmax);
        entries.forEach((e, i) => {
          const key = caps > 1 ? `${base} [cap ${i + 1}]` : base;
          if (!panel.series.has(key)) panel.series.set(key, []);
          panel.series.get(key)!.push({ x, y: e.y });
        });
      }
    }
    for (const pts of panel.series.values()) {
      pts.sort((a, b) => a.x - b.x);
    }
    panels.push(panel);
  }
  return panels;
}

function drawPanel(panel: Panel, originX: number, originY: number,
                   colors: Map<string, string>,
                   xlabel: string, ylabel: string,
                   refY?: number, diagonal = false): string[] {
  const px0 = originX + MARGIN.left;
  const px1 = originX + PANEL_W - MARGIN.right;
  const py0 = originY + PANEL_H - MARGIN.bottom;
  const py1 = originY + MARGIN.top;
  const xs: number[] = [];
  const ys: number[] = [];
  for (const pts of panel.series.values()) {
    for (const p of pts) {
      if (Number.isFinite(p.x) && Number.isFinite(p.y)) {
        xs.push(p.x);
        ys.push(p.y);
      }
    }
  }
  if (refY !== undefined) ys.push(refY);
  const sx = svg.makeScale(xs, px0, px1);
  const sy = svg.makeScale(ys, py0, py1);

  const out: string[] = [];
  out.push(svg.rect(px0, py1, px1 - px0, py0 - py1,
    'fill="none" stroke="#333" class="panel"'));
  out.push(svg.text(originX + PANEL_W / 2, originY + MARGIN.top - 10,
    panel.title, 12, "middle", 'class="panel-title"'));
  // axis ticks
  for (let i = 0; i <= 4; i++) {
    const vx = sx.lo + ((sx.hi - sx.lo) * i) / 4;
    out.push(svg.line(svg.place(sx, vx), py0, svg.place(sx, vx), py0 + 4, "#333"));
    out.push(svg.text(svg.place(sx, vx), py0 + 15, vx.toFixed(2), 9, "middle"));
    const vy = sy.lo + ((sy.hi - sy.lo) * i) / 4;
    out.push(svg.line(px0 - 4, svg.place(sy, vy), px0, svg.place(sy, vy), "#333"));
    out.push(svg.text(px0 - 6, svg.place(sy, vy) + 3, vy.toFixed(2), 9, "end"));
  }
  out.push(svg.text((px0 + px1) / 2, originY + PANEL_H - 6, xlabel, 11, "middle"));
  out.push(svg.text(originX + 14, (py0 + py1) / 2, ylabel, 11, "middle",
    `transform="rotate(-90 ${svg.fmt(originX + 14)} ${svg.fmt((py0 + py1) / 2)})"`));

  if (refY !== undefined) {
    out.push(svg.line(px0, svg.place(sy, refY), px1, svg.place(sy, refY),
      "#888", 'stroke-dasharray="5,4" class="refline"'));
  }
  if (diagonal) {
    const lo = Math.max(sx.lo, sy.lo);
    const hi = Math.min(sx.hi, sy.hi);
    if (lo < hi) {
      out.push(svg.line(svg.place(sx, lo), svg.place(sy, lo),
        svg.place(sx, hi), svg.place(sy, hi), "#888",
        'stroke-dasharray="5,4" class="refline"'));
    }
  }
  for (const [name, pts] of panel.series) {
    const finite = pts.filter((p) => Number.isFinite(p.x) && Number.isFinite(p.y));
    if (finite.length === 0) continue;
    const coords = finite.map(
      (p) => [svg.place(sx, p.x), svg.place(sy, p.y)] as [number, number]);
    out.push(svg.polyline(coords, colors.get(name)!,
      `class="series" data-series="${svg.escapeText(name)}"`));
  }
  return out;
}

function legend(colors: Map<string, string>, width: number): string[] {
  const out: string[] = [];
  let x = MARGIN.left;
  for (const [name, color] of colors) {
    out.push(svg.line(x, LEGEND_H - 10, x + 18, LEGEND_H - 10, color,
      'stroke-width="2"'));
    out.push(svg.text(x + 22, LEGEND_H - 6, name, 10, "start",
      'class="legend-label"'));
    x += 30 + 7 * name.length;
    if (x > width - 60) break;
  }
  return out;
}

function renderMetrics(spec: FigureSpec): string {
  const cfg = METRICS_KINDS[spec.kind as Exclude<FigureKind, "trace">];
  const table = parseCsv(spec.csvText);
  requireColumns(table, ["dgp", "rule", "grid", cfg.ycol]);
  if (table.rows.length === 0) {
    throw new SchemaError("metrics CSV has no data rows");
  }
  const panels = groupMetrics(table, cfg.ycol, spec.panelPerDgp ?? true);
  const seriesNames = [...new Set(
    panels.flatMap((p) => [...p.series.keys()]))].sort();
  const colors = new Map(seriesNames.map(
    (n, i) => [n, svg.PALETTE[i % svg.PALETTE.length]]));

  const cols = Math.min(panels.length, 4);
  const rows = Math.ceil(panels.length / cols);
  const width = cols * PANEL_W;
  const height = LEGEND_H + rows * PANEL_H;
  const body = legend(colors, width);
  panels.forEach((panel, i) => {
    const ox = (i % cols) * PANEL_W;
    const oy = LEGEND_H + Math.floor(i / cols) * PANEL_H;
    body.push(...drawPanel(panel, ox, oy, colors, cfg.xlabel, cfg.ylabel,
      cfg.refY?.(spec)));
  });
  return svg.document(width, height, body);
}

function renderTrace(spec: FigureSpec): string {
  const table = parseCsv(spec.csvText);
  requireColumns(table,
    ["n", "p_hat", "tau_hat", "var_tau", "sigma2_p", "n_forecast", "stopped"]);
  if (table.rows.length === 0) {
    throw new SchemaError("trace CSV has no data rows");
  }
  const varPts: Point[] = [];
  const fcPts: Point[] = [];
  for (const row of table.rows) {
    const n = num(row.n);
    varPts.push({ x: n, y: num(row.var_tau) });
    fcPts.push({ x: n, y: num(row.n_forecast) });
  }
  const colors = new Map([
    ["var_tau", svg.PALETTE[0]],
    ["n_forecast", svg.PALETTE[1]],
  ]);
  const top: Panel = { title: "effect-estimate variance", series: new Map([["var_tau", varPts]]) };
  const bottom: Panel = { title: "stopping-size forecast", series: new Map([["n_forecast", fcPts]]) };
  const body = legend(colors, PANEL_W);
  body.push(...drawPanel(top, 0, LEGEND_H, colors, "n", "variance",
    spec.threshold, false));
  body.push(...drawPanel(bottom, 0, LEGEND_H + PANEL_H, colors, "n",
    "forecast n", undefined, true));
  return svg.document(PANEL_W, LEGEND_H + 2 * PANEL_H, body);
}

export function render(spec: FigureSpec): string {
  if (!FIGURE_KINDS.includes(spec.kind)) {
    throw new SchemaError(
      `unknown figure kind "${spec.kind}"; expected one of ${FIGURE_KINDS.join(", ")}`);
  }
  return spec.kind === "trace" ? renderTrace(spec) : renderMetrics(spec);
}
