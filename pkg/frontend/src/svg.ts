/**
 * Small SVG toolkit: escaping, tick placement, number formatting, framed
 * line panels and a diverging-color raster for two-scale fields.  Output
 * is a deterministic function of the inputs — no timestamps, no
 * randomness — so re-rendering identical data gives identical bytes.
 */

export const FONT = "Helvetica, Arial, sans-serif";
export const SERIES_COLORS = [
  "#4361ee", "#e63946", "#2d6a4f", "#9d4edd", "#f4a261", "#264653",
];

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Compact tick label: plain decimals mid-range, exponential elsewhere. */
export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-2) return v.toExponential(1).replace("e+", "e");
  const s = v.toFixed(a < 1 ? 3 : 2);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

export function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const nice = [1, 2, 5, 10].map((m) => m * mag);
  const step = nice.find((n) => n >= rough) ?? rough;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + step * 0.01; v += step) ticks.push(v);
  return ticks;
}

export interface Viewport {
  /** Top-left corner and size of the plotting rectangle. */
  x0: number;
  y0: number;
  width: number;
  height: number;
}

export interface Scale {
  xOf: (v: number) => number;
  yOf: (v: number) => number;
}

export function makeScale(view: Viewport, xMin: number, xMax: number,
                          yMin: number, yMax: number): Scale {
  return {
    xOf: (v) => view.x0 + ((v - xMin) / (xMax - xMin || 1)) * view.width,
    yOf: (v) =>
      view.y0 + view.height - ((v - yMin) / (yMax - yMin || 1)) * view.height,
  };
}

/** Axis frame with ticks, grid lines and axis labels. */
export function frame(view: Viewport, scale: Scale,
                      xMin: number, xMax: number, yMin: number, yMax: number,
                      xLabel: string, yLabel: string): string {
  let s = "";
  const bottom = view.y0 + view.height;
  for (const v of niceTicks(yMin, yMax, 5)) {
    const y = scale.yOf(v).toFixed(1);
    s += `<line x1="${view.x0}" y1="${y}" x2="${view.x0 + view.width}" y2="${y}" stroke="#eee" stroke-width="0.5"/>\n`;
    s += `<line x1="${view.x0 - 3}" y1="${y}" x2="${view.x0}" y2="${y}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${view.x0 - 5}" y="${(scale.yOf(v) + 2.5).toFixed(1)}" text-anchor="end" font-size="7" fill="#555">${esc(fmt(v))}</text>\n`;
  }
  for (const v of niceTicks(xMin, xMax, 6)) {
    const x = scale.xOf(v).toFixed(1);
    s += `<line x1="${x}" y1="${bottom}" x2="${x}" y2="${bottom + 3}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${x}" y="${bottom + 12}" text-anchor="middle" font-size="7" fill="#555">${esc(fmt(v))}</text>\n`;
  }
  s += `<line x1="${view.x0}" y1="${view.y0}" x2="${view.x0}" y2="${bottom}" stroke="#333" stroke-width="0.7"/>\n`;
  s += `<line x1="${view.x0}" y1="${bottom}" x2="${view.x0 + view.width}" y2="${bottom}" stroke="#333" stroke-width="0.7"/>\n`;
  if (xLabel) {
    s += `<text x="${view.x0 + view.width / 2}" y="${bottom + 24}" text-anchor="middle" font-size="8" fill="#333">${esc(xLabel)}</text>\n`;
  }
  if (yLabel) {
    const cy = view.y0 + view.height / 2;
    const lx = view.x0 - 38;
    s += `<text x="${lx}" y="${cy}" text-anchor="middle" font-size="8" fill="#333" transform="rotate(-90,${lx},${cy})">${esc(yLabel)}</text>\n`;
  }
  return s;
}

export interface Curve {
  label: string;
  x: Float64Array | number[];
  y: Float64Array | number[];
  color: string;
  dash?: string;
}

export function polyline(curve: Curve, scale: Scale): string {
  const pts: string[] = [];
  for (let i = 0; i < curve.x.length; i++) {
    pts.push(`${scale.xOf(curve.x[i]!).toFixed(1)},${scale.yOf(curve.y[i]!).toFixed(1)}`);
  }
  const dash = curve.dash ? ` stroke-dasharray="${curve.dash}"` : "";
  return `<polyline fill="none" stroke="${curve.color}" stroke-width="1"${dash} points="${pts.join(" ")}"/>\n`;
}

export function legend(view: Viewport, curves: Curve[]): string {
  const w = Math.max(...curves.map((c) => c.label.length)) * 4.5 + 26;
  const h = curves.length * 11 + 6;
  const x0 = view.x0 + view.width - w - 4;
  const y0 = view.y0 + 4;
  let s = `<rect x="${x0}" y="${y0}" width="${w}" height="${h}" rx="2" fill="white" fill-opacity="0.85" stroke="#ddd" stroke-width="0.5"/>\n`;
  curves.forEach((c, i) => {
    const y = y0 + 9 + i * 11;
    const dash = c.dash ? ` stroke-dasharray="${c.dash}"` : "";
    s += `<line x1="${x0 + 4}" y1="${y}" x2="${x0 + 18}" y2="${y}" stroke="${c.color}" stroke-width="1.2"${dash}/>\n`;
    s += `<text x="${x0 + 22}" y="${y + 2.5}" font-size="7" fill="#444">${esc(c.label)}</text>\n`;
  });
  return s;
}

/** Ranges padded so flat data still spans a drawable interval. */
export function valueRange(arrays: (Float64Array | number[])[]): [number, number] {
  let min = Infinity;
  let max = -Infinity;
  for (const a of arrays) {
    for (let i = 0; i < a.length; i++) {
      const v = a[i]!;
      if (v < min) min = v;
      if (v > max) max = v;
    }
  }
  if (!Number.isFinite(min) || !Number.isFinite(max)) return [0, 1];
  if (min === max) return [min - 0.5, max + 0.5];
  const pad = 0.05 * (max - min);
  return [min - pad, max + pad];
}

export function openSvg(width: number, height: number): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" font-family="${FONT}">\n` +
    `<rect width="${width}" height="${height}" fill="#fff"/>\n`;
}

export function title(text: string, x: number, y: number): string {
  if (!text) return "";
  return `<text x="${x}" y="${y}" font-size="10" font-weight="600" fill="#222">${esc(text)}</text>\n`;
}

// ---------------------------------------------------------------------------
// Diverging raster for fields that should be read against zero.
// ---------------------------------------------------------------------------

const COLD: [number, number, number] = [33, 102, 172];   // deep blue
const MID: [number, number, number] = [247, 247, 247];   // near white
const WARM: [number, number, number] = [178, 24, 43];    // deep red

function mix(a: [number, number, number], b: [number, number, number],
             t: number): string {
  const c = a.map((v, i) => Math.round(v + (b[i]! - v) * t));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

/** Symmetric diverging color: value/limit in [-1, 1] mapped blue-white-red. */
export function divergingColor(value: number, limit: number): string {
  const t = limit > 0 ? Math.max(-1, Math.min(1, value / limit)) : 0;
  return t < 0 ? mix(MID, COLD, -t) : mix(MID, WARM, t);
}

/**
 * Block-mean downsampling for display: keeps at most `cap` samples along
 * an axis by averaging runs of neighbouring samples.  Returns the run
 * boundaries so cells can be drawn with exact extents.
 */
export function blockEdges(n: number, cap: number): number[] {
  const blocks = Math.min(n, cap);
  const edges: number[] = [];
  for (let b = 0; b <= blocks; b++) edges.push(Math.round((b * n) / blocks));
  return edges;
}

export interface Raster {
  /** Cell colors, row-major over [xBlocks][yBlocks]. */
  colors: string[][];
  /** Normalized block extents in [0, 1] along each axis. */
  xEdges: number[];
  yEdges: number[];
  /** Symmetric color limit actually used (max |value|). */
  limit: number;
}

export function rasterize(values: Float64Array, nX: number, nY: number,
                          capX: number, capY: number): Raster {
  let limit = 0;
  for (let i = 0; i < values.length; i++) {
    const a = Math.abs(values[i]!);
    if (a > limit) limit = a;
  }
  const xEdges = blockEdges(nX, capX);
  const yEdges = blockEdges(nY, capY);
  const colors: string[][] = [];
  for (let bi = 0; bi < xEdges.length - 1; bi++) {
    const row: string[] = [];
    for (let bj = 0; bj < yEdges.length - 1; bj++) {
      let sum = 0;
      let count = 0;
      for (let i = xEdges[bi]!; i < xEdges[bi + 1]!; i++) {
        for (let j = yEdges[bj]!; j < yEdges[bj + 1]!; j++) {
          sum += values[i * nY + j]!;
          count++;
        }
      }
      row.push(divergingColor(count > 0 ? sum / count : 0, limit));
    }
    colors.push(row);
  }
  return {
    colors,
    xEdges: xEdges.map((e) => e / nX),
    yEdges: yEdges.map((e) => e / nY),
    limit,
  };
}
