/**
 * Results grid and integrated content viewer. Every highlight comes from
 * server-provided character ranges.
 */

import { ApiClient, ResultRow, SearchResponse } from "./api.js";
import { paginationLabel, pageCount } from "./query.js";
import { segmentText } from "./highlight.js";

export class ResultsView {
  private response: SearchResponse | null = null;
  private page = 1;
  private readonly pageSize = 50;

  constructor(
    private grid: HTMLElement,
    private viewer: HTMLElement,
    private api: ApiClient,
  ) {}

  showError(message: string): void {
    this.grid.replaceChildren();
    const error = document.createElement("p");
    error.className = "error";
    error.textContent = message;
    this.grid.appendChild(error);
  }

  show(response: SearchResponse): void {
    this.response = response;
    this.page = 1;
    this.render();
  }

  private render(): void {
    this.grid.replaceChildren();
    if (!this.response) {
      return;
    }
    const { trace, results } = this.response;

    const title = document.createElement("h2");
    title.textContent = "Template Pattern Search Results";
    this.grid.appendChild(title);

    const traceLine = document.createElement("p");
    traceLine.className = "trace";
    traceLine.textContent = `filter trace: ${trace.join(" → ")}`;
    this.grid.appendChild(traceLine);

    if (results.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty";
      empty.textContent = "no matching documents";
      this.grid.appendChild(empty);
      return;
    }

    const start = (this.page - 1) * this.pageSize;
    const rows = results.slice(start, start + this.pageSize);
    const table = document.createElement("table");
    for (const row of rows) {
      const tr = document.createElement("tr");
      tr.className = "result-row";
      const docCell = document.createElement("td");
      docCell.textContent = row.doc;
      const snippetCell = document.createElement("td");
      for (const seg of segmentText(
        row.snippet,
        row.highlights.map((h) => ({ cs: h.cs, ce: h.ce, label: h.class })),
      )) {
        if (seg.label === null) {
          snippetCell.appendChild(document.createTextNode(seg.text));
        } else {
          const mark = document.createElement("mark");
          mark.className = `hl-${seg.label.toLowerCase()}`;
          mark.title = seg.label;
          mark.textContent = seg.text;
          snippetCell.appendChild(mark);
        }
      }
      tr.append(docCell, snippetCell);
      tr.addEventListener("click", () => void this.openViewer(row));
      table.appendChild(tr);
    }
    this.grid.appendChild(table);

    const footer = document.createElement("p");
    footer.className = "pagination";
    footer.textContent =
      `Page ${this.page} of ${pageCount(this.pageSize, results.length)} — ` +
      `Displaying ${paginationLabel(this.page, this.pageSize, results.length)}`;
    this.grid.appendChild(footer);
  }

  private async openViewer(row: ResultRow): Promise<void> {
    this.viewer.replaceChildren();
    const title = document.createElement("h2");
    title.textContent = "Integrated Template Pattern Content Viewer";
    this.viewer.appendChild(title);
    try {
      const doc = await this.api.doc(row.doc);
      const body = document.createElement("p");
      body.className = "doc-body";
      for (const seg of segmentText(doc.text, [
        { cs: row.span.cs, ce: row.span.ce, label: "annotation" },
      ])) {
        if (seg.label === null) {
          body.appendChild(document.createTextNode(seg.text));
        } else {
          const mark = document.createElement("mark");
          mark.className = "hl-annotation";
          mark.textContent = seg.text;
          body.appendChild(mark);
        }
      }
      const heading = document.createElement("h3");
      heading.textContent = `${doc.id} (${doc.source || "unknown source"})`;
      this.viewer.append(heading, body);
    } catch (err) {
      const badge = document.createElement("p");
      badge.className = "error";
      badge.textContent = `document unavailable: ${String(err)}`;
      this.viewer.appendChild(badge);
    }
  }
}
