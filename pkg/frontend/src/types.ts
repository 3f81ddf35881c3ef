// Wire types for the aiuflow HTTP API.

export interface DeviceDoc {
  id: string;
  rn: number;
  cn: number;
  cvs: boolean;
  rvs: boolean;
  pvs: boolean;
  cnhs: boolean;
  cohs: boolean;
  phs: boolean;
  we: boolean;
  je: boolean;
  aa: boolean;
  cd: number;
  tsa: boolean;
  comment?: string;
}

export interface TextWidgetDoc {
  type: "text";
  node: string;
  lines: string[];
}

export interface TableWidgetDoc {
  type: "table";
  node: string;
  header: string[];
  rows: string[][];
  widths: number[];
  selectable: boolean;
  rowOffset: number;
}

export interface FieldWidgetDoc {
  type: "field";
  node: string;
  name: string;
  label: string;
  valueType: "text" | "integer" | "date";
  required: boolean;
}

export interface ChoicesWidgetDoc {
  type: "choices";
  node: string;
  items: { key: string; label: string }[];
  multiple: boolean;
}

export interface ImageWidgetDoc {
  type: "image";
  node: string;
  ref: string;
  summary: string;
}

export type WidgetDoc =
  | TextWidgetDoc
  | TableWidgetDoc
  | FieldWidgetDoc
  | ChoicesWidgetDoc
  | ImageWidgetDoc;

export interface CommandDoc {
  id: string;
  label: string;
  action: string; // quit | ok | command | details | back | page-next | page-prev
  payload?: string;
}

export interface PageDoc {
  node: string;
  title: string;
  widgets: WidgetDoc[];
  commands: CommandDoc[];
  pageIndex: number;
  pageCount: number;
  width: number;
  height: number;
}

export interface PagesResponse {
  pages: PageDoc[];
  activeNodes: string[];
  status: string;
}

export interface StartResponse extends PagesResponse {
  sessionId: string;
}

export interface OutcomeDoc {
  outcome: string;
  key?: string;
  keys?: string[];
  row?: number;
  x?: number;
  y?: number;
  values?: Record<string, unknown>;
}

export interface OutcomeResponse {
  finished: boolean;
  pages?: PageDoc[];
  activeNodes?: string[];
  status?: string;
}

export interface HistoryEntry {
  node: string;
  outcome: OutcomeDoc;
}

export interface HistoryResponse {
  status: string;
  history: HistoryEntry[];
  env: Record<string, unknown>;
}

export interface PlanDoc {
  device: string;
  thresholds: Record<string, number>;
  nodes: Record<
    string,
    {
      decision: string;
      pages?: number;
      overviewColumns?: string[];
      detailCommand?: string;
    }
  >;
  forks: Record<string, { layout: string; order: string[] }>;
}
