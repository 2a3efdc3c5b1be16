/**
 * Domain failure reported by the service (HTTP 400).
 *
 * `code` is the library's machine-readable error name: NonConvex, NotSimple,
 * Degenerate, InvalidKernel, ShapeMismatch, ParseError, MissingFile,
 * ConfigError.
 */
export class QuadkitServiceError extends Error {
  constructor(
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "QuadkitServiceError";
  }
}

/** Request rejected before any handler ran (HTTP 422): wrong arity, bad ranges. */
export class QuadkitValidationError extends Error {
  constructor(readonly detail: string) {
    super(detail);
    this.name = "QuadkitValidationError";
  }
}

/** The service could not be reached, or replied with something unparseable. */
export class QuadkitConnectionError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "QuadkitConnectionError";
  }
}
