// Character-grid layout of a structured page document.
//
// The emulator performs no adaptation logic: columns, widths, row slices
// and page counts all arrive decided by the server; this module only
// turns the widgets into monospace lines (clipped to the device grid)
// plus interactive span annotations for clicks.

import type { PageDoc, WidgetDoc } from "./types.js";

export type SpanAction =
  | { kind: "select-row"; node: string; row: number }
  | { kind: "choice"; node: string; key: string; multiple: boolean }
  | { kind: "field"; node: string; name: string };

export interface Span {
  line: number;
  start: number;
  length: number;
  action: SpanAction;
}

export interface GridContent {
  lines: string[];
  spans: Span[];
}

function clip(text: string, width: number): string {
  return text.length <= width ? text : text.slice(0, width);
}

function wrap(text: string, width: number): string[] {
  if (!text) return [];
  const out: string[] = [];
  for (let i = 0; i < text.length; i += width) {
    out.push(text.slice(i, i + width));
  }
  return out;
}

function tableRowLines(
  cells: string[],
  widths: number[],
  pageWidth: number,
): string[] {
  const padded = cells
    .map((cell, i) => clip(cell, widths[i]).padEnd(widths[i]))
    .join("|");
  if (padded.length <= pageWidth) return [padded];
  return wrap(padded, pageWidth);
}

/** Render one widget to lines, appending interactive spans. */
function widgetLines(
  widget: WidgetDoc,
  width: number,
  lineBase: number,
  spans: Span[],
  state: RenderState,
): string[] {
  switch (widget.type) {
    case "text":
      return widget.lines.map((line) => clip(line, width));
    case "table": {
      const lines: string[] = [];
      if (widget.header.length) {
        lines.push(...tableRowLines(widget.header, widget.widths, width));
      }
      widget.rows.forEach((row, i) => {
        const rowLines = tableRowLines(row, widget.widths, width);
        if (widget.selectable) {
          rowLines.forEach((line, j) => {
            spans.push({
              line: lineBase + lines.length + j,
              start: 0,
              length: line.length,
              action: {
                kind: "select-row",
                node: widget.node,
                row: widget.rowOffset + i,
              },
            });
          });
        }
        lines.push(...rowLines);
      });
      return lines;
    }
    case "field": {
      const prefix = `${widget.label}${widget.required ? "*" : ""}: `;
      const room = Math.max(width - prefix.length, 0);
      const value = state.fieldValues.get(`${widget.node}.${widget.name}`) ?? "";
      const fill = value
        ? clip(value, Math.min(room, 16)).padEnd(Math.min(room, 16), "_")
        : "_".repeat(Math.min(room, 16));
      const line = clip(prefix + fill, width);
      spans.push({
        line: lineBase,
        start: 0,
        length: line.length,
        action: { kind: "field", node: widget.node, name: widget.name },
      });
      return [line];
    }
    case "choices": {
      return widget.items.map((item, i) => {
        const key = `${widget.node}.${item.key}`;
        const checked = state.checkedChoices.has(key);
        const mark = widget.multiple
          ? checked
            ? "[x]"
            : "[ ]"
          : checked
            ? "(*)"
            : "( )";
        const line = clip(`${mark} ${item.label}`, width);
        spans.push({
          line: lineBase + i,
          start: 0,
          length: line.length,
          action: {
            kind: "choice",
            node: widget.node,
            key: item.key,
            multiple: widget.multiple,
          },
        });
        return line;
      });
    }
    case "image": {
      const lines = [clip(`[image: ${widget.ref}]`, width)];
      lines.push(...wrap(widget.summary, width));
      return lines;
    }
  }
}

export interface RenderState {
  /** checked multiple-choice keys, as "node.key" */
  checkedChoices: ReadonlySet<string>;
  /** current form input values, as "node.name" -> text */
  fieldValues: ReadonlyMap<string, string>;
}

const EMPTY_STATE: RenderState = {
  checkedChoices: new Set(),
  fieldValues: new Map(),
};

/** Lay a page out as grid lines: title row first, then widget content. */
export function layoutPage(page: PageDoc, state: RenderState = EMPTY_STATE): GridContent {
  const spans: Span[] = [];
  let title = page.title;
  if (page.pageCount > 1) {
    title = `${title} (${page.pageIndex}/${page.pageCount})`;
  }
  const lines: string[] = [clip(title, page.width)];
  for (const widget of page.widgets) {
    lines.push(...widgetLines(widget, page.width, lines.length, spans, state));
  }
  // hard grid bound: never hand back more than the device can show
  const bounded = lines.slice(0, page.height);
  return { lines: bounded, spans: spans.filter((s) => s.line < bounded.length) };
}

/** Bound violations of a laid-out page against a device grid; empty = ok. */
export function gridViolations(
  content: GridContent,
  device: { rn: number; cn: number },
): string[] {
  const problems: string[] = [];
  if (content.lines.length > device.rn) {
    problems.push(`page uses ${content.lines.length} rows, device shows ${device.rn}`);
  }
  content.lines.forEach((line, i) => {
    if (line.length > device.cn) {
      problems.push(`line ${i} uses ${line.length} columns, device shows ${device.cn}`);
    }
  });
  return problems;
}
