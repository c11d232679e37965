/**
 * Canonical JSON: keys sorted recursively, compact separators. The emitted
 * query string must match the CLI byte-for-byte, so serialization rules are
 * pinned here rather than left to JSON.stringify key order.
 */

export type Json = null | boolean | number | string | Json[] | { [key: string]: Json };

export function canonicalJson(value: Json): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const keys = Object.keys(value).sort();
  const body = keys.map((k) => JSON.stringify(k) + ":" + canonicalJson(value[k]));
  return "{" + body.join(",") + "}";
}
