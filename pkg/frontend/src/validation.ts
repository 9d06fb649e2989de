// Client-side mirror of the server's typed-edit schema: catch malformed
// commands before any network call. The server remains authoritative.

import type { ConflictBundle, EditCommand } from "./types.js";

export const WORLD_KINDS = [
  "add_pre_clause",
  "remove_pre_clause",
  "add_post_clause",
  "remove_post_clause",
  "add_state_var",
] as const;
export const CHECK_KINDS = ["add_check", "remove_check", "replace_check"] as const;
export const INIT_KINDS = ["set_init_binding"] as const;

const ALL_KINDS = new Set<string>([...WORLD_KINDS, ...CHECK_KINDS, ...INIT_KINDS]);

const CHECK_LINE =
  /^\s*(?:(?:CALL|NO-CALL)\s+)?[A-Za-z_][\w-]*\s*(?:\([^)]*\))?\s*(?:(?:OR|AFTER|BEFORE|FOLLOWS|PRECEDES)\s+(?:(?:CALL|NO-CALL)\s+)?[A-Za-z_][\w-]*\s*(?:\([^)]*\))?\s*)*$/;

export function toolNameOf(checkText: string): string | null {
  const m = checkText.match(/^\s*(?:CALL|NO-CALL)?\s*([A-Za-z_][\w-]*)/);
  return m ? m[1] : null;
}

export function validateEdit(cmd: EditCommand, bundle: ConflictBundle): string[] {
  const problems: string[] = [];
  if (!cmd.kind || !ALL_KINDS.has(cmd.kind)) {
    problems.push(`unknown edit kind ${JSON.stringify(cmd.kind)}`);
    return problems;
  }
  const worldKind = (WORLD_KINDS as readonly string[]).includes(cmd.kind);
  const checkKind = (CHECK_KINDS as readonly string[]).includes(cmd.kind);
  if (worldKind && cmd.target !== "world_model") problems.push("world edits need target world_model");
  if (checkKind && cmd.target !== "check_set") problems.push("check edits need target check_set");

  const knownTools = new Set(Object.keys(bundle.tool_styles));
  const knownChecks = new Set(bundle.checks.map((c) => c.id));

  if (cmd.kind === "add_pre_clause" || cmd.kind === "add_post_clause") {
    if (!cmd.tool) problems.push("missing tool");
    else if (!knownTools.has(cmd.tool)) problems.push(`unknown tool ${cmd.tool}`);
    if (!cmd.expr || !cmd.expr.trim().startsWith("(")) problems.push("expr must be a parenthesized clause");
  }
  if (cmd.kind === "remove_pre_clause" || cmd.kind === "remove_post_clause") {
    if (!cmd.tool) problems.push("missing tool");
    if (cmd.index === undefined || cmd.index < 0) problems.push("missing clause index");
  }
  if (cmd.kind === "add_state_var") {
    if (!cmd.name) problems.push("missing variable name");
    if (!cmd.var_type) problems.push("missing variable type");
  }
  if (cmd.kind === "add_check" || cmd.kind === "replace_check") {
    if (!cmd.check_text) problems.push("missing check text");
    else {
      if (!CHECK_LINE.test(cmd.check_text)) problems.push("check text does not parse");
      const tool = toolNameOf(cmd.check_text);
      if (tool && !knownTools.has(tool)) problems.push(`unknown tool ${tool}`);
    }
  }
  if (cmd.kind === "remove_check" || cmd.kind === "replace_check") {
    if (!cmd.check_id) problems.push("missing check id");
    else if (!knownChecks.has(cmd.check_id)) problems.push(`unknown check id ${cmd.check_id}`);
  }
  if (cmd.kind === "set_init_binding" && !cmd.name) problems.push("missing variable name");
  return problems;
}
