/**
 * Figure specification: which artifact CSVs to read and how to lay them
 * out.  Specs are INI files in the same dialect the simulation CLI uses;
 * unknown sections or keys are rejected so a typo cannot silently change
 * the figure.
 *
 *   [figure]   kind = pulse | pair | heatmap, optional title
 *   [input]    csv = path                  (pulse, heatmap)
 *   [left]     csv = path, label = text    (pair)
 *   [right]    csv = path, label = text    (pair)
 *   [axes]     x_label, y_label, rotate    (rotate: heatmap only)
 *
 * CSV paths are kept as written; the caller resolves them against the
 * spec file's directory.
 */
import { ParseError } from "./errors.js";
import { parseIni, type Sections } from "./ini.js";

export interface PulseSpec {
  kind: "pulse";
  csv: string;
  title: string;
  xLabel: string;
  yLabel: string;
}

export interface PairSide {
  csv: string;
  label: string;
}

export interface PairSpec {
  kind: "pair";
  left: PairSide;
  right: PairSide;
  title: string;
  xLabel: string;
  yLabel: string;
}

export interface HeatmapSpec {
  kind: "heatmap";
  csv: string;
  rotate: boolean;
  title: string;
  xLabel: string;
  yLabel: string;
}

export type FigureSpec = PulseSpec | PairSpec | HeatmapSpec;

const KNOWN_KEYS: Record<string, Set<string>> = {
  figure: new Set(["kind", "title"]),
  input: new Set(["csv"]),
  left: new Set(["csv", "label"]),
  right: new Set(["csv", "label"]),
  axes: new Set(["x_label", "y_label", "rotate"]),
};

const SECTIONS_BY_KIND: Record<string, Set<string>> = {
  pulse: new Set(["figure", "input", "axes"]),
  pair: new Set(["figure", "left", "right", "axes"]),
  heatmap: new Set(["figure", "input", "axes"]),
};

function fail(source: string, message: string): never {
  throw new ParseError(source, 0, message);
}

function checkKeys(sections: Sections, source: string): void {
  for (const [name, body] of sections) {
    const known = KNOWN_KEYS[name];
    if (!known) {
      fail(source, `unknown section [${name}] ` +
        `(known: ${Object.keys(KNOWN_KEYS).join(", ")})`);
    }
    for (const key of body.keys()) {
      if (!known.has(key)) {
        fail(source, `unknown key ${key} in [${name}] ` +
          `(known: ${[...known].join(", ")})`);
      }
    }
  }
}

function need(sections: Sections, source: string, section: string,
              key: string): string {
  const value = sections.get(section)?.get(key);
  if (value === undefined || value === "") {
    fail(source, `missing required key ${key} in [${section}]`);
  }
  return value;
}

function optional(sections: Sections, section: string, key: string,
                  fallback: string): string {
  return sections.get(section)?.get(key) ?? fallback;
}

function parseRotate(sections: Sections, source: string): boolean {
  const raw = sections.get("axes")?.get("rotate");
  if (raw === undefined) return false;
  if (raw === "true") return true;
  if (raw === "false") return false;
  fail(source, `axes.rotate must be true or false, got: ${raw}`);
}

export function parseFigureSpec(text: string, source: string): FigureSpec {
  const sections = parseIni(text, source);
  checkKeys(sections, source);
  const kind = need(sections, source, "figure", "kind");
  const allowed = SECTIONS_BY_KIND[kind];
  if (!allowed) {
    fail(source, `figure.kind must be one of ` +
      `${Object.keys(SECTIONS_BY_KIND).join(", ")}, got: ${kind}`);
  }
  for (const name of sections.keys()) {
    if (!allowed.has(name)) {
      fail(source, `section [${name}] does not apply to kind = ${kind}`);
    }
  }
  if (kind !== "heatmap" && sections.get("axes")?.has("rotate")) {
    fail(source, "axes.rotate only applies to kind = heatmap");
  }

  const title = optional(sections, "figure", "title", "");
  if (kind === "pulse") {
    return {
      kind,
      csv: need(sections, source, "input", "csv"),
      title,
      xLabel: optional(sections, "axes", "x_label", "z"),
      yLabel: optional(sections, "axes", "y_label", ""),
    };
  }
  if (kind === "pair") {
    return {
      kind,
      left: {
        csv: need(sections, source, "left", "csv"),
        label: optional(sections, "left", "label", "left"),
      },
      right: {
        csv: need(sections, source, "right", "csv"),
        label: optional(sections, "right", "label", "right"),
      },
      title,
      xLabel: optional(sections, "axes", "x_label", "x"),
      yLabel: optional(sections, "axes", "y_label", ""),
    };
  }
  return {
    kind: "heatmap",
    csv: need(sections, source, "input", "csv"),
    rotate: parseRotate(sections, source),
    title,
    xLabel: optional(sections, "axes", "x_label", "x"),
    yLabel: optional(sections, "axes", "y_label", "y"),
  };
}
