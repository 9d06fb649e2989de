// API payload shapes, mirroring the review service's JSON.

export interface ScenarioRow {
  id: string;
  sample_id: string;
  state: string;
  round: number;
  conflict_kind: string | null;
}

export interface CheckView {
  id: string;
  text: string;
  locked: boolean;
  kept: boolean;
}

export type TraceStep = [string, Record<string, unknown>];

export interface WitnessView {
  trace: TraceStep[];
  initial_state: Record<string, unknown>;
}

export interface EditCommand {
  target: "world_model" | "check_set";
  kind: string;
  tool?: string;
  index?: number;
  name?: string;
  var_type?: string;
  value?: unknown;
  check_text?: string;
  check_id?: string;
  expr?: string;
  rationale?: string;
}

export interface ConflictBundle {
  id: string;
  sample_id: string;
  state: string;
  round: number;
  prompt: string;
  document_text: string;
  checks: CheckView[];
  world_model: string;
  init: Record<string, unknown>;
  witness: WitnessView | null;
  suggestions: EditCommand[];
  tool_styles: Record<string, string>;
  versions: { checks: number; model: number; init: number };
  history: Array<Record<string, unknown>>;
}

export interface EditResponseError {
  status: number;
  detail: string;
}
