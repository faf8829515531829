/** Hand-rolled SVG primitives: deterministic output, no DOM dependency. */

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";

export function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(2);
}

export function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Scale {
  lo: number;
  hi: number;
  px0: number;
  px1: number;
}

export function makeScale(values: number[], px0: number, px1: number): Scale {
  const finite = values.filter((v) => Number.isFinite(v));
  let lo = finite.length ? Math.min(...finite) : 0;
  let hi = finite.length ? Math.max(...finite) : 1;
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = 0.05 * (hi - lo);
  return { lo: lo - pad, hi: hi + pad, px0, px1 };
}

export function place(s: Scale, v: number): number {
  return s.px0 + ((v - s.lo) / (s.hi - s.lo)) * (s.px1 - s.px0);
}

export function polyline(points: Array<[number, number]>, color: string,
                         attrs = ""): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polyline points="${pts}" fill="none" stroke="${color}" ` +
    `stroke-width="1.5" ${attrs}/>`;
}

export function line(x1: number, y1: number, x2: number, y2: number,
                     color: string, attrs = ""): string {
  return `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" ` +
    `y2="${fmt(y2)}" stroke="${color}" ${attrs}/>`;
}

export function text(x: number, y: number, s: string, size = 11,
                     anchor = "start", attrs = ""): string {
  return `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" ` +
    `text-anchor="${anchor}" ${FONT} ${attrs}>${escapeText(s)}</text>`;
}

export function rect(x: number, y: number, w: number, h: number,
                     attrs = ""): string {
  return `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" ` +
    `height="${fmt(h)}" ${attrs}/>`;
}

export function document(width: number, height: number,
                         body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}

/** Evenly spaced axis ticks with value labels. */
export function axisTicks(s: Scale, count: number,
                          position: (v: number) => string): string[] {
  const out: string[] = [];
  for (let i = 0; i <= count; i++) {
    const v = s.lo + ((s.hi - s.lo) * i) / count;
    out.push(position(v));
  }
  return out;
}
