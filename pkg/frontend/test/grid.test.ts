// Layout of structured pages into the character grid.

import { describe, expect, it } from "vitest";

import { gridViolations, layoutPage } from "../src/grid.js";
import type { PageDoc } from "../src/types.js";

function page(partial: Partial<PageDoc>): PageDoc {
  return {
    node: "n",
    title: "Title",
    widgets: [],
    commands: [{ id: "quit", label: "Quit", action: "quit" }],
    pageIndex: 1,
    pageCount: 1,
    width: 30,
    height: 14,
    ...partial,
  };
}

describe("layoutPage", () => {
  it("puts the title on the first line and appends a page indicator", () => {
    const single = layoutPage(page({ title: "Hotels" }));
    expect(single.lines[0]).toBe("Hotels");
    const paged = layoutPage(page({ title: "Hotels", pageIndex: 2, pageCount: 4 }));
    expect(paged.lines[0]).toBe("Hotels (2/4)");
  });

  it("clips every line to the device width", () => {
    const content = layoutPage(
      page({
        title: "An overly long page title that cannot fit",
        widgets: [
          { type: "text", node: "n", lines: ["x".repeat(99)] },
        ],
      }),
    );
    for (const line of content.lines) {
      expect(line.length).toBeLessThanOrEqual(30);
    }
  });

  it("pads table cells to the server-sent widths and marks selectable rows", () => {
    const content = layoutPage(
      page({
        widgets: [
          {
            type: "table",
            node: "tbl",
            header: ["Hotel", "Price"],
            rows: [
              ["Hotel Aurora", "EUR 55"],
              ["Albergo Roma", "EUR 62"],
            ],
            widths: [18, 9],
            selectable: true,
            rowOffset: 10,
          },
        ],
      }),
    );
    expect(content.lines[1]).toBe("Hotel             |Price    ");
    expect(content.lines[2]).toBe("Hotel Aurora      |EUR 55   ");
    const actions = content.spans.map((s) => s.action);
    expect(actions).toEqual([
      { kind: "select-row", node: "tbl", row: 10 },
      { kind: "select-row", node: "tbl", row: 11 },
    ]);
  });

  it("skips the header on continuation slices", () => {
    const content = layoutPage(
      page({
        widgets: [
          {
            type: "table",
            node: "tbl",
            header: [],
            rows: [["a", "b"]],
            widths: [3, 3],
            selectable: false,
            rowOffset: 7,
          },
        ],
      }),
    );
    expect(content.lines).toHaveLength(2); // title + one row
  });

  it("renders choice marks that track the checked state", () => {
    const widgets: PageDoc["widgets"] = [
      {
        type: "choices",
        node: "pick",
        items: [
          { key: "a", label: "Alpha" },
          { key: "b", label: "Beta" },
        ],
        multiple: true,
      },
    ];
    const unchecked = layoutPage(page({ widgets }));
    expect(unchecked.lines[1]).toBe("[ ] Alpha");
    const checked = layoutPage(page({ widgets }), {
      checkedChoices: new Set(["pick.a"]),
      fieldValues: new Map(),
    });
    expect(checked.lines[1]).toBe("[x] Alpha");
    expect(checked.spans[0].action).toEqual({
      kind: "choice",
      node: "pick",
      key: "a",
      multiple: true,
    });
  });

  it("shows field lines with typed-in values", () => {
    const widgets: PageDoc["widgets"] = [
      {
        type: "field",
        node: "form",
        name: "guests",
        label: "Guests",
        valueType: "integer",
        required: true,
      },
    ];
    const empty = layoutPage(page({ widgets }));
    expect(empty.lines[1]).toBe("Guests*: ________________");
    const filled = layoutPage(page({ widgets }), {
      checkedChoices: new Set(),
      fieldValues: new Map([["form.guests", "2"]]),
    });
    expect(filled.lines[1]).toBe("Guests*: 2_______________");
  });

  it("wraps overwide table rows instead of overflowing", () => {
    const content = layoutPage(
      page({
        width: 10,
        widgets: [
          {
            type: "table",
            node: "tbl",
            header: [],
            rows: [["aaaaaaaaaa", "bbbbbbbbbb"]],
            widths: [10, 10],
            selectable: true,
            rowOffset: 0,
          },
        ],
      }),
    );
    for (const line of content.lines) {
      expect(line.length).toBeLessThanOrEqual(10);
    }
    // both wrapped lines stay clickable as the same row
    const rows = content.spans.map((s) => s.action);
    expect(rows.every((a) => a.kind === "select-row" && a.row === 0)).toBe(true);
  });

  it("never exceeds the device height", () => {
    const content = layoutPage(
      page({
        height: 5,
        widgets: [
          { type: "text", node: "n", lines: Array(40).fill("line") },
        ],
      }),
    );
    expect(content.lines.length).toBeLessThanOrEqual(5);
  });
});

describe("gridViolations", () => {
  it("flags oversize content", () => {
    const content = { lines: ["x".repeat(31), "ok"], spans: [] };
    const problems = gridViolations(content, { rn: 1, cn: 30 });
    expect(problems).toHaveLength(2);
  });

  it("accepts bounded content", () => {
    const content = { lines: ["abc"], spans: [] };
    expect(gridViolations(content, { rn: 14, cn: 30 })).toEqual([]);
  });
});
