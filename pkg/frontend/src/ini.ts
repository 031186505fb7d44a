/**
 * Minimal INI reader matching the simulation CLI's configuration dialect:
 * `[section]` headers, `key = value` pairs, `#`/`;` comments (full-line
 * and inline), case-sensitive names, duplicates rejected.
 */
import { ParseError } from "./errors.js";

export type Sections = Map<string, Map<string, string>>;

function stripInlineComment(value: string): string {
  for (const mark of ["#", ";"]) {
    const at = value.indexOf(mark);
    if (at >= 0) value = value.slice(0, at);
  }
  return value.trim();
}

export function parseIni(text: string, source: string): Sections {
  const sections: Sections = new Map();
  let current: Map<string, string> | null = null;
  let currentName = "";
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const lineNo = i + 1;
    const raw = lines[i] ?? "";
    const line = raw.trim();
    if (line === "" || line.startsWith("#") || line.startsWith(";")) continue;
    if (line.startsWith("[")) {
      if (!line.endsWith("]")) {
        throw new ParseError(source, lineNo, `unterminated section header: ${line}`);
      }
      currentName = line.slice(1, -1).trim();
      if (currentName === "") {
        throw new ParseError(source, lineNo, "empty section name");
      }
      if (sections.has(currentName)) {
        throw new ParseError(source, lineNo, `duplicate section [${currentName}]`);
      }
      current = new Map();
      sections.set(currentName, current);
      continue;
    }
    const eq = line.indexOf("=");
    if (eq < 0) {
      throw new ParseError(source, lineNo, `expected key = value, got: ${line}`);
    }
    if (current === null) {
      throw new ParseError(source, lineNo, "key outside of any [section]");
    }
    const key = line.slice(0, eq).trim();
    const value = stripInlineComment(line.slice(eq + 1));
    if (key === "") {
      throw new ParseError(source, lineNo, "empty key");
    }
    if (current.has(key)) {
      throw new ParseError(
        source, lineNo, `duplicate key ${key} in [${currentName}]`);
    }
    current.set(key, value);
  }
  return sections;
}
