// The device emulator: pick a device profile and a service spec, then
// operate the running service inside a viewport constrained to the
// device's character grid.
//
// All layout decisions shown here (column subsets, row slices, page
// counts, merged/sequenced forks) originate in the server's adaptation
// plan; the emulator renders the received pages verbatim and submits
// per-node outcomes.

import { ApiClient, ApiError } from "./api.js";
import {
  GridContent,
  RenderState,
  Span,
  gridViolations,
  layoutPage,
} from "./grid.js";
import type {
  CommandDoc,
  DeviceDoc,
  FieldWidgetDoc,
  OutcomeDoc,
  PageDoc,
  PagesResponse,
} from "./types.js";

export interface AppOptions {
  /** called when the user switches device/spec mid-session; return true to restart */
  confirmRestart?: () => boolean;
}

export class EmulatorApp {
  specs: string[] = [];
  devices: DeviceDoc[] = [];
  selectedSpec = "";
  selectedDevice: DeviceDoc | null = null;
  sessionId: string | null = null;
  pages: PageDoc[] = [];
  activeNodes: string[] = [];
  finished = false;
  detailPage: PageDoc | null = null;
  log: string[] = [];
  /** grid-bound violations observed across all renders; must stay empty */
  violations: string[] = [];

  private selectedRows = new Map<string, number>();
  private checkedChoices = new Set<string>();
  private fieldValues = new Map<string, string>();
  private pageCursor = new Map<string, number>();
  private busy: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly options: AppOptions = {},
  ) {}

  /** all pending interactions settled */
  whenIdle(): Promise<void> {
    return this.busy;
  }

  private enqueue(task: () => Promise<void>): void {
    this.busy = this.busy.then(task).catch((error) => {
      this.appendLog(`unexpected error: ${String(error)}`);
      this.render();
    });
  }

  async init(): Promise<void> {
    this.specs = await this.api.listSpecs();
    this.devices = await this.api.listDevices();
    this.render();
  }

  private appendLog(entry: string): void {
    this.log.push(entry);
  }

  private doc(): Document {
    return this.root.ownerDocument;
  }

  // -------------------------------------------------------------------
  // Session driving
  // -------------------------------------------------------------------

  private async start(): Promise<void> {
    if (!this.selectedSpec || !this.selectedDevice) return;
    const started = await this.api.startSession(
      this.selectedSpec,
      this.selectedDevice.id,
    );
    this.sessionId = started.sessionId;
    this.finished = false;
    this.detailPage = null;
    this.selectedRows.clear();
    this.checkedChoices.clear();
    this.fieldValues.clear();
    this.pageCursor.clear();
    this.appendLog(
      `session ${started.sessionId} started: ${this.selectedSpec} on ${this.selectedDevice.id}`,
    );
    this.applyPages(started);
    this.render();
  }

  private applyPages(response: PagesResponse): void {
    this.pages = response.pages;
    this.activeNodes = response.activeNodes;
  }

  private async submit(node: string, outcome: OutcomeDoc): Promise<void> {
    if (!this.sessionId || this.finished) return;
    try {
      const response = await this.api.submitOutcome(this.sessionId, node, outcome);
      this.appendLog(`${node}: ${describeOutcome(outcome)}`);
      this.detailPage = null;
      if (response.finished) {
        this.finished = true;
        this.pages = [];
        this.activeNodes = [];
        this.appendLog("session finished");
      } else {
        this.applyPages({
          pages: response.pages ?? [],
          activeNodes: response.activeNodes ?? [],
          status: "running",
        });
      }
    } catch (error) {
      if (error instanceof ApiError) {
        this.appendLog(`rejected [${error.code}]: ${error.message}`);
        this.showFieldErrors(node, error);
      } else {
        throw error;
      }
    }
    this.render();
  }

  private fieldErrors = new Map<string, string>();

  private showFieldErrors(node: string, error: ApiError): void {
    if (error.code === "FieldValidationError") {
      this.fieldErrors.set(node, error.message);
    }
  }

  /** node to address for a page-level command: composite fork pages are
   * not submittable themselves, so fall back to their first active branch */
  private submissionNode(page: PageDoc): string {
    if (this.activeNodes.includes(page.node)) return page.node;
    for (const widget of page.widgets) {
      if (this.activeNodes.includes(widget.node)) return widget.node;
    }
    return page.node;
  }

  private handleCommand(page: PageDoc, command: CommandDoc): void {
    this.enqueue(async () => {
      switch (command.action) {
        case "quit":
          await this.submit(this.submissionNode(page), { outcome: "null" });
          return;
        case "ok":
          await this.submit(this.submissionNode(page), { outcome: "ok" });
          return;
        case "command":
          await this.submit(this.submissionNode(page), {
            outcome: "command",
            key: command.payload ?? command.id,
          });
          return;
        case "details": {
          const node = this.tableNode(page);
          const row = node === null ? undefined : this.selectedRows.get(node);
          if (node === null || row === undefined) {
            this.appendLog("details: select a row first");
            this.render();
            return;
          }
          if (!this.sessionId) return;
          this.detailPage = await this.api.getDetail(this.sessionId, node, row);
          this.render();
          return;
        }
        case "back":
          this.detailPage = null;
          this.render();
          return;
        case "page-next":
        case "page-prev": {
          await this.turnPage(page, command.action === "page-next" ? 1 : -1);
          return;
        }
        default:
          this.appendLog(`unsupported command ${command.action}`);
          this.render();
      }
    });
  }

  private tableNode(page: PageDoc): string | null {
    for (const widget of page.widgets) {
      if (widget.type === "table" && widget.selectable) return widget.node;
    }
    // a two-step overview may have paged past its table slice
    return this.selectedRows.size ? [...this.selectedRows.keys()][0] : null;
  }

  private async turnPage(page: PageDoc, delta: number): Promise<void> {
    if (!this.sessionId) return;
    const current = this.pageCursor.get(page.node) ?? page.pageIndex;
    const next = Math.min(Math.max(current + delta, 1), page.pageCount);
    if (next === current) return;
    const response = await this.api.getPages(this.sessionId, page.node, next);
    this.pageCursor.set(page.node, next);
    this.pages = this.pages.map((p) =>
      p.node === page.node ? response.pages[0] : p,
    );
    this.render();
  }

  private handleSpan(page: PageDoc, span: Span): void {
    const action = span.action;
    if (action.kind === "choice") {
      if (action.multiple) {
        const key = `${action.node}.${action.key}`;
        if (this.checkedChoices.has(key)) this.checkedChoices.delete(key);
        else this.checkedChoices.add(key);
        this.render();
      } else {
        this.enqueue(() =>
          this.submit(action.node, { outcome: "choiceSelected", key: action.key }),
        );
      }
    } else if (action.kind === "select-row") {
      this.selectedRows.set(action.node, action.row);
      this.render();
    } else if (action.kind === "field") {
      const input = this.root.querySelector<HTMLInputElement>(
        `input[data-node="${action.node}"][name="${action.name}"]`,
      );
      input?.focus();
    }
  }

  private submitRow(node: string, row: number): void {
    this.enqueue(() => this.submit(node, { outcome: "tupleSelected", row }));
  }

  private submitChoices(node: string): void {
    const keys = [...this.checkedChoices]
      .filter((key) => key.startsWith(`${node}.`))
      .map((key) => key.slice(node.length + 1))
      .sort();
    this.enqueue(() => this.submit(node, { outcome: "choicesSelected", keys }));
  }

  private submitFields(node: string, fields: FieldWidgetDoc[]): void {
    const values: Record<string, unknown> = {};
    for (const field of fields) {
      const raw = this.fieldValues.get(`${node}.${field.name}`) ?? "";
      if (raw === "") continue;
      values[field.name] =
        field.valueType === "integer" && /^-?\d+$/.test(raw) ? Number(raw) : raw;
    }
    this.fieldErrors.delete(node);
    this.enqueue(() => this.submit(node, { outcome: "filledFields", values }));
  }

  // -------------------------------------------------------------------
  // Rendering
  // -------------------------------------------------------------------

  render(): void {
    const doc = this.doc();
    this.root.textContent = "";
    this.root.appendChild(this.renderToolbar(doc));
    const main = doc.createElement("main");
    const frames = doc.createElement("section");
    frames.id = "frames";
    if (this.finished) {
      const banner = doc.createElement("div");
      banner.id = "finished";
      banner.className = "banner";
      banner.textContent = "Session finished.";
      frames.appendChild(banner);
    } else if (this.detailPage) {
      frames.appendChild(this.renderFrame(doc, this.detailPage, true));
    } else {
      for (const page of this.pages) {
        frames.appendChild(this.renderFrame(doc, page, false));
      }
    }
    main.appendChild(frames);
    main.appendChild(this.renderLog(doc));
    this.root.appendChild(main);
  }

  private renderToolbar(doc: Document): HTMLElement {
    const bar = doc.createElement("header");
    bar.className = "toolbar";

    const specPicker = doc.createElement("select");
    specPicker.id = "spec-picker";
    specPicker.disabled = this.specs.length === 0;
    specPicker.appendChild(new Option("choose a service...", ""));
    for (const name of this.specs) {
      specPicker.appendChild(new Option(name, name, false, name === this.selectedSpec));
    }
    specPicker.addEventListener("change", () => {
      if (!this.confirmSwitch()) {
        specPicker.value = this.selectedSpec;
        return;
      }
      this.selectedSpec = specPicker.value;
      this.render();
    });

    const devicePicker = doc.createElement("select");
    devicePicker.id = "device-picker";
    devicePicker.disabled = this.devices.length === 0;
    devicePicker.appendChild(new Option("choose a device...", ""));
    for (const device of this.devices) {
      const label = `${device.id} (${device.rn}x${device.cn})`;
      devicePicker.appendChild(
        new Option(label, device.id, false, device.id === this.selectedDevice?.id),
      );
    }
    devicePicker.addEventListener("change", () => {
      if (!this.confirmSwitch()) {
        devicePicker.value = this.selectedDevice?.id ?? "";
        return;
      }
      this.selectedDevice =
        this.devices.find((d) => d.id === devicePicker.value) ?? null;
      this.render();
    });

    const start = doc.createElement("button");
    start.id = "start-btn";
    start.textContent = "Start session";
    start.disabled = !this.selectedSpec || !this.selectedDevice;
    start.addEventListener("click", () => this.enqueue(() => this.start()));

    bar.append(specPicker, devicePicker, start);
    return bar;
  }

  private confirmSwitch(): boolean {
    if (!this.sessionId || this.finished) return true;
    const confirm = this.options.confirmRestart ?? (() => true);
    if (!confirm()) return false;
    this.appendLog("session abandoned (device/spec switched)");
    this.sessionId = null;
    this.pages = [];
    this.activeNodes = [];
    return true;
  }

  private renderFrame(doc: Document, page: PageDoc, isDetail: boolean): HTMLElement {
    const device = this.selectedDevice;
    const frame = doc.createElement("div");
    frame.className = "device-frame";
    frame.dataset.node = page.node;

    const state: RenderState = {
      checkedChoices: this.checkedChoices,
      fieldValues: this.fieldValues,
    };
    const content = layoutPage(page, state);
    if (device) {
      this.violations.push(
        ...gridViolations(content, device).map((v) => `${page.node}: ${v}`),
      );
    }

    frame.appendChild(this.renderGrid(doc, page, content));
    frame.appendChild(this.renderCommands(doc, page));
    if (!isDetail) frame.appendChild(this.renderControls(doc, page));
    return frame;
  }

  private renderGrid(doc: Document, page: PageDoc, content: GridContent): HTMLElement {
    const grid = doc.createElement("pre");
    grid.className = "grid";
    grid.style.width = `${page.width}ch`;
    const selectedRow = (node: string) => this.selectedRows.get(node);

    content.lines.forEach((line, lineIndex) => {
      const lineEl = doc.createElement("span");
      lineEl.className = "grid-line";
      const spans = content.spans
        .filter((s) => s.line === lineIndex)
        .sort((a, b) => a.start - b.start);
      if (!spans.length) {
        lineEl.textContent = line;
      } else {
        let cursor = 0;
        for (const span of spans) {
          if (span.start > cursor) {
            lineEl.appendChild(doc.createTextNode(line.slice(cursor, span.start)));
          }
          const el = doc.createElement("span");
          el.className = `span span-${span.action.kind}`;
          el.textContent = line.slice(span.start, span.start + span.length);
          const action = span.action;
          if (action.kind === "select-row") {
            el.dataset.row = String(action.row);
            el.dataset.node = action.node;
            if (selectedRow(action.node) === action.row) el.classList.add("selected");
            el.addEventListener("click", () => this.handleSpan(page, span));
            el.addEventListener("dblclick", () =>
              this.submitRow(action.node, action.row),
            );
          } else if (action.kind === "choice") {
            el.dataset.key = action.key;
            el.dataset.node = action.node;
            el.addEventListener("click", () => this.handleSpan(page, span));
          } else {
            el.dataset.node = action.node;
            el.dataset.field = action.name;
            el.addEventListener("click", () => this.handleSpan(page, span));
          }
          lineEl.appendChild(el);
          cursor = span.start + span.length;
        }
        if (cursor < line.length) {
          lineEl.appendChild(doc.createTextNode(line.slice(cursor)));
        }
      }
      grid.appendChild(lineEl);
      grid.appendChild(doc.createTextNode("\n"));
    });
    return grid;
  }

  private renderCommands(doc: Document, page: PageDoc): HTMLElement {
    const bar = doc.createElement("div");
    bar.className = "commands";
    for (const command of page.commands) {
      const button = doc.createElement("button");
      button.textContent = command.label;
      button.dataset.action = command.action;
      button.dataset.id = command.id;
      button.addEventListener("click", () => this.handleCommand(page, command));
      bar.appendChild(button);
    }
    return bar;
  }

  /** control strip: real inputs for form pages, a submit button for
   * multiple-choice pages */
  private renderControls(doc: Document, page: PageDoc): HTMLElement {
    const strip = doc.createElement("div");
    strip.className = "controls";

    const fieldsByNode = new Map<string, FieldWidgetDoc[]>();
    let multiNode: string | null = null;
    for (const widget of page.widgets) {
      if (widget.type === "field") {
        const list = fieldsByNode.get(widget.node) ?? [];
        list.push(widget);
        fieldsByNode.set(widget.node, list);
      } else if (widget.type === "choices" && widget.multiple) {
        multiNode = widget.node;
      }
    }

    for (const [node, fields] of fieldsByNode) {
      const form = doc.createElement("form");
      form.className = "field-form";
      form.dataset.node = node;
      for (const field of fields) {
        const label = doc.createElement("label");
        label.textContent = field.label;
        const input = doc.createElement("input");
        input.name = field.name;
        input.dataset.node = node;
        input.type = "text";
        input.value = this.fieldValues.get(`${node}.${field.name}`) ?? "";
        input.addEventListener("input", () => {
          this.fieldValues.set(`${node}.${field.name}`, input.value);
        });
        label.appendChild(input);
        form.appendChild(label);
      }
      const submit = doc.createElement("button");
      submit.type = "submit";
      submit.textContent = "Submit";
      form.appendChild(submit);
      const errors = doc.createElement("div");
      errors.className = "field-errors";
      errors.textContent = this.fieldErrors.get(node) ?? "";
      form.appendChild(errors);
      form.addEventListener("submit", (event) => {
        event.preventDefault();
        this.submitFields(node, fields);
      });
      strip.appendChild(form);
    }

    if (multiNode !== null) {
      const node = multiNode;
      const button = doc.createElement("button");
      button.className = "submit-choices";
      button.dataset.node = node;
      button.textContent = "Submit selection";
      button.addEventListener("click", () => this.submitChoices(node));
      strip.appendChild(button);
    }
    return strip;
  }

  private renderLog(doc: Document): HTMLElement {
    const aside = doc.createElement("aside");
    const heading = doc.createElement("h2");
    heading.textContent = "Event log";
    const list = doc.createElement("ul");
    list.id = "event-log";
    for (const entry of this.log) {
      const item = doc.createElement("li");
      item.textContent = entry;
      list.appendChild(item);
    }
    aside.append(heading, list);
    return aside;
  }
}

export function describeOutcome(outcome: OutcomeDoc): string {
  switch (outcome.outcome) {
    case "command":
    case "choiceSelected":
      return `${outcome.outcome}(${outcome.key})`;
    case "choicesSelected":
      return `choicesSelected(${(outcome.keys ?? []).join(",")})`;
    case "tupleSelected":
      return `tupleSelected(row ${outcome.row})`;
    case "point":
      return `point(${outcome.x},${outcome.y})`;
    case "filledFields":
      return `filledFields(${Object.keys(outcome.values ?? {}).join(",")})`;
    default:
      return outcome.outcome;
  }
}
