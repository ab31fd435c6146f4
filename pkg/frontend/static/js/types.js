/**
 * Wire types for the review service JSON API.
 *
 * These mirror the server's response dicts field for field. Fields the
 * server fills in lazily (job frame counts, validation results) are typed
 * nullable rather than optional because the server always emits the key.
 */
export {};
