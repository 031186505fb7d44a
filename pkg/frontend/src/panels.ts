/**
 * The three panel layouts the simulation artifacts are read into:
 *
 *   pulse    one panel, every profile column of a pulse CSV against z
 *            (activator plus one curve per inhibitor mode);
 *   pair     two panels side by side, final-time (u, v) profiles of two
 *            trajectory CSVs, labelled per panel;
 *   heatmap  a two-scale snapshot V(x, y) on a symmetric diverging scale
 *            around zero, with the cell-average profile overlaid.
 *
 * Everything drawn here is read straight from the tables; no physics is
 * recomputed beyond display reductions (final-time selection, block
 * means for raster cells, the overlaid per-x mean).
 */
import { column, columnsWithPrefix, requireColumns, type Table } from "./csv.js";
import { SchemaError } from "./errors.js";
import type { HeatmapSpec, PairSpec, PulseSpec } from "./spec.js";
import {
  SERIES_COLORS, type Curve, type Viewport, divergingColor, esc, fmt, frame,
  legend, makeScale, openSvg, polyline, rasterize, title, valueRange,
} from "./svg.js";

const WIDTH = 720;

// ---------------------------------------------------------------------------
// pulse: all profile columns against z
// ---------------------------------------------------------------------------

export function pulseFigure(table: Table, spec: PulseSpec): string {
  requireColumns(table, ["z", "u"]);
  const z = column(table, "z");
  const curves: Curve[] = [
    { label: "u", x: z, y: column(table, "u"), color: SERIES_COLORS[0]! },
  ];
  for (const mode of columnsWithPrefix(table, "v_")) {
    curves.push({
      label: mode.name,
      x: z,
      y: mode.values,
      color: SERIES_COLORS[curves.length % SERIES_COLORS.length]!,
    });
  }

  const height = 340;
  const view: Viewport = { x0: 56, y0: 36, width: WIDTH - 72, height: 240 };
  const [yLo, yHi] = valueRange(curves.map((c) => c.y));
  const xLo = z[0] ?? 0;
  const xHi = z[z.length - 1] ?? 1;
  const scale = makeScale(view, xLo, xHi, yLo, yHi);

  let s = openSvg(WIDTH, height);
  s += title(spec.title, view.x0, 22);
  s += frame(view, scale, xLo, xHi, yLo, yHi, spec.xLabel, spec.yLabel);
  for (const c of curves) s += polyline(c, scale);
  s += legend(view, curves);
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------
// pair: final-time (u, v) profiles of two trajectories, side by side
// ---------------------------------------------------------------------------

interface Profile {
  x: number[];
  u: number[];
  v: number[];
}

function finalProfile(table: Table): Profile {
  requireColumns(table, ["t", "x", "u", "v"]);
  const t = column(table, "t");
  if (t.length === 0) {
    throw new SchemaError(`${table.source}: trajectory CSV has no rows`);
  }
  let tEnd = -Infinity;
  for (let i = 0; i < t.length; i++) if (t[i]! > tEnd) tEnd = t[i]!;
  const x: number[] = [];
  const u: number[] = [];
  const v: number[] = [];
  const xs = column(table, "x");
  const us = column(table, "u");
  const vs = column(table, "v");
  for (let i = 0; i < t.length; i++) {
    if (t[i] === tEnd) {
      x.push(xs[i]!);
      u.push(us[i]!);
      v.push(vs[i]!);
    }
  }
  return { x, u, v };
}

export function pairFigure(left: Table, right: Table, spec: PairSpec): string {
  const sides = [
    { profile: finalProfile(left), label: spec.left.label },
    { profile: finalProfile(right), label: spec.right.label },
  ];

  const height = 300;
  const gap = 40;
  const panelWidth = (WIDTH - 2 * 56 - gap) / 2;
  const [yLo, yHi] = valueRange(
    sides.flatMap((s) => [s.profile.u, s.profile.v]));

  let s = openSvg(WIDTH, height);
  s += title(spec.title, 56, 18);
  sides.forEach((side, i) => {
    const view: Viewport = {
      x0: 56 + i * (panelWidth + gap + 16),
      y0: 44,
      width: panelWidth,
      height: 200,
    };
    const p = side.profile;
    const xLo = p.x[0] ?? 0;
    const xHi = p.x[p.x.length - 1] ?? 1;
    const scale = makeScale(view, xLo, xHi, yLo, yHi);
    const curves: Curve[] = [
      { label: "u", x: p.x, y: p.u, color: SERIES_COLORS[0]! },
      { label: "v", x: p.x, y: p.v, color: SERIES_COLORS[1]! },
    ];
    s += `<text x="${view.x0 + view.width / 2}" y="${view.y0 - 8}" text-anchor="middle" font-size="9" fill="#222">${esc(side.label)}</text>\n`;
    s += frame(view, scale, xLo, xHi, yLo, yHi, spec.xLabel,
               i === 0 ? spec.yLabel : "");
    for (const c of curves) s += polyline(c, scale);
    s += legend(view, curves);
  });
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------
// heatmap: V(x, y) snapshot with the cell-average overlay
// ---------------------------------------------------------------------------

interface SnapshotGrid {
  xs: number[];
  ys: number[];
  /** Row-major [x][y] values, y fastest. */
  values: Float64Array;
}

function snapshotGrid(table: Table): SnapshotGrid {
  requireColumns(table, ["x", "y", "V"]);
  const x = column(table, "x");
  const y = column(table, "y");
  const values = column(table, "V");
  const n = table.length;
  if (n === 0) {
    throw new SchemaError(`${table.source}: snapshot CSV has no rows`);
  }
  let nY = 1;
  while (nY < n && y[nY] !== y[0]) nY++;
  if (n % nY !== 0) {
    throw new SchemaError(
      `${table.source}: ${n} rows do not tile an x-y grid ` +
        `(cell period ${nY})`);
  }
  const nX = n / nY;
  for (let i = 0; i < n; i++) {
    if (y[i] !== y[i % nY] || x[i] !== x[Math.floor(i / nY) * nY]) {
      throw new SchemaError(
        `${table.source}: row ${i + 2} breaks the x-major, y-fastest ` +
          `grid layout`);
    }
  }
  const xs: number[] = [];
  for (let i = 0; i < nX; i++) xs.push(x[i * nY]!);
  const ys: number[] = [];
  for (let j = 0; j < nY; j++) ys.push(y[j]!);
  return { xs, ys, values };
}

export function heatmapFigure(table: Table, spec: HeatmapSpec): string {
  const grid = snapshotGrid(table);
  const nX = grid.xs.length;
  const nY = grid.ys.length;
  const raster = rasterize(grid.values, nX, nY, 240, 120);

  const height = 400;
  const view: Viewport = { x0: 56, y0: 36, width: WIDTH - 56 - 86, height: 300 };
  // normalized [0,1] grid position -> pixel, flipped when rotated 180deg
  const px = (u: number) =>
    view.x0 + (spec.rotate ? 1 - u : u) * view.width;
  const py = (u: number) =>
    view.y0 + view.height - (spec.rotate ? 1 - u : u) * view.height;

  const xLo = grid.xs[0]!;
  const xHi = grid.xs[nX - 1]!;
  const yLo = grid.ys[0]!;
  const yHi = grid.ys[nY - 1]!;
  // axis scale anchored in display orientation; ticks still use lo..hi
  const scale = makeScale(
    view,
    spec.rotate ? xHi : xLo, spec.rotate ? xLo : xHi,
    spec.rotate ? yHi : yLo, spec.rotate ? yLo : yHi);

  let s = openSvg(WIDTH, height);
  s += title(spec.title, view.x0, 22);
  s += `<g shape-rendering="crispEdges">\n`;
  for (let bi = 0; bi < raster.colors.length; bi++) {
    const xA = px(raster.xEdges[bi]!);
    const xB = px(raster.xEdges[bi + 1]!);
    for (let bj = 0; bj < raster.colors[bi]!.length; bj++) {
      const yA = py(raster.yEdges[bj]!);
      const yB = py(raster.yEdges[bj + 1]!);
      s += `<rect x="${Math.min(xA, xB).toFixed(2)}" y="${Math.min(yA, yB).toFixed(2)}" width="${Math.abs(xB - xA).toFixed(2)}" height="${Math.abs(yB - yA).toFixed(2)}" fill="${raster.colors[bi]![bj]}"/>\n`;
    }
  }
  s += `</g>\n`;
  s += frame(view, scale, xLo, xHi, yLo, yHi, spec.xLabel, spec.yLabel);

  // cell-average overlay: mean over y per x, drawn on a value axis whose
  // zero is the panel midline and whose half-height is the color limit
  const mean: number[] = [];
  for (let i = 0; i < nX; i++) {
    let sum = 0;
    for (let j = 0; j < nY; j++) sum += grid.values[i * nY + j]!;
    mean.push(sum / nY);
  }
  const midY = view.y0 + view.height / 2;
  const valueToY = (v: number) =>
    midY - (raster.limit > 0 ? v / raster.limit : 0) * (view.height / 2);
  s += `<line x1="${view.x0}" y1="${midY}" x2="${view.x0 + view.width}" y2="${midY}" stroke="#333" stroke-width="0.5" stroke-dasharray="4,3" opacity="0.6"/>\n`;
  const pts: string[] = [];
  for (let i = 0; i < nX; i++) {
    pts.push(`${px(i / (nX - 1 || 1)).toFixed(1)},${valueToY(mean[i]!).toFixed(1)}`);
  }
  s += `<polyline fill="none" stroke="#111" stroke-width="1.2" points="${pts.join(" ")}"/>\n`;
  s += `<text x="${view.x0 + 4}" y="${midY - 5}" font-size="7" fill="#333">cell average (midline = 0)</text>\n`;

  s += colorbar(view, raster.limit);
  s += "</svg>\n";
  return s;
}

function colorbar(view: Viewport, limit: number): string {
  const x0 = view.x0 + view.width + 14;
  const w = 12;
  const steps = 24;
  const stepH = view.height / steps;
  let s = `<g shape-rendering="crispEdges">\n`;
  for (let i = 0; i < steps; i++) {
    // top of the bar is +limit, bottom is -limit
    const value = limit * (1 - (2 * (i + 0.5)) / steps);
    const color = divergingColor(value, limit);
    s += `<rect x="${x0}" y="${(view.y0 + i * stepH).toFixed(2)}" width="${w}" height="${(stepH + 0.5).toFixed(2)}" fill="${color}"/>\n`;
  }
  s += `</g>\n`;
  s += `<rect x="${x0}" y="${view.y0}" width="${w}" height="${view.height}" fill="none" stroke="#333" stroke-width="0.5"/>\n`;
  const marks: [number, number][] = [
    [limit, view.y0],
    [0, view.y0 + view.height / 2],
    [-limit, view.y0 + view.height],
  ];
  for (const [value, y] of marks) {
    s += `<text x="${x0 + w + 4}" y="${(y + 2.5).toFixed(1)}" font-size="7" fill="#555">${esc(fmt(value))}</text>\n`;
  }
  return s;
}
