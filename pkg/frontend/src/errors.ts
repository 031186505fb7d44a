/** Error raised when a CSV artifact does not carry the expected shape. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

/** Error raised for malformed spec or CSV text, with source location.
 *  Line 0 marks a file-level problem with no single offending line. */
export class ParseError extends Error {
  constructor(source: string, line: number, message: string) {
    super(line > 0 ? `${source}:${line}: ${message}` : `${source}: ${message}`);
    this.name = "ParseError";
  }
}
