/**
 * Highlight segmentation. All ranges come from the server; the client only
 * slices text at the given offsets and never re-matches.
 */

export interface HighlightRange {
  cs: number;
  ce: number;
  label: string;
}

export interface Segment {
  text: string;
  label: string | null;
}

export function segmentText(text: string, ranges: HighlightRange[]): Segment[] {
  const sorted = ranges
    .filter((r) => r.ce > r.cs && r.cs >= 0 && r.ce <= text.length)
    .slice()
    .sort((a, b) => a.cs - b.cs || a.ce - b.ce);
  const segments: Segment[] = [];
  let cursor = 0;
  for (const r of sorted) {
    if (r.cs < cursor) {
      continue; // overlapping range, already covered
    }
    if (r.cs > cursor) {
      segments.push({ text: text.slice(cursor, r.cs), label: null });
    }
    segments.push({ text: text.slice(r.cs, r.ce), label: r.label });
    cursor = r.ce;
  }
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), label: null });
  }
  return segments;
}

export function joinSegments(segments: Segment[]): string {
  return segments.map((s) => s.text).join("");
}
