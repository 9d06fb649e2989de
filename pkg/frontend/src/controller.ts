// Review-loop controller: state machine between the API and the renderers.
// Deliberately DOM-free (the entry point wires its outputs into the page) so
// the whole flow is unit-testable against a stubbed client.

import { ApiClient, ApiError } from "./api.js";
import type { ConflictBundle, EditCommand, ScenarioRow } from "./types.js";
import { validateEdit } from "./validation.js";

export interface ViewSink {
  showInbox(rows: ScenarioRow[]): void;
  showBundle(bundle: ConflictBundle): void;
  showError(message: string): void;
  showNotice(message: string): void;
  askReload(message: string): void;
}

export class ReviewController {
  bundle: ConflictBundle | null = null;

  constructor(
    private api: ApiClient,
    private view: ViewSink,
  ) {}

  async refreshInbox(): Promise<ScenarioRow[]> {
    const { scenarios } = await this.api.listPending();
    this.view.showInbox(scenarios);
    return scenarios;
  }

  async openBundle(id: string): Promise<ConflictBundle> {
    this.bundle = await this.api.bundle(id);
    this.view.showBundle(this.bundle);
    return this.bundle;
  }

  /** Accept a pre-filled suggestion card (typed edit, human provenance). */
  async acceptSuggestion(index: number): Promise<void> {
    if (!this.bundle) throw new Error("no open bundle");
    const suggestion = this.bundle.suggestions[index];
    if (!suggestion) throw new Error(`no suggestion ${index}`);
    await this.submitCommand(suggestion);
  }

  /** Validate locally, then submit with the current artifact version. */
  async submitCommand(cmd: EditCommand): Promise<boolean> {
    if (!this.bundle) throw new Error("no open bundle");
    const problems = validateEdit(cmd, this.bundle);
    if (problems.length > 0) {
      this.view.showError(`invalid edit: ${problems.join("; ")}`);
      return false;
    }
    const version = this.versionFor(cmd);
    try {
      this.bundle = await this.api.submitEdit(this.bundle.id, cmd, version, "human");
      this.view.showBundle(this.bundle);
      this.view.showNotice(`edit applied; checks at version ${this.bundle.versions.checks}`);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.view.askReload(err.detail);
        return false;
      }
      if (err instanceof ApiError) {
        this.view.showError(`server rejected the edit: ${err.detail}`);
        return false;
      }
      throw err;
    }
  }

  private versionFor(cmd: EditCommand): number {
    const versions = this.bundle!.versions;
    if (cmd.kind.endsWith("_check") || cmd.kind === "add_check") return versions.checks;
    if (cmd.kind === "set_init_binding") return versions.init;
    return versions.model;
  }

  async revalidate(): Promise<string> {
    if (!this.bundle) throw new Error("no open bundle");
    const { state } = await this.api.revalidate(this.bundle.id);
    this.view.showNotice(`re-validation finished: ${state}`);
    await this.refreshInbox();
    return state;
  }

  async discard(): Promise<void> {
    if (!this.bundle) throw new Error("no open bundle");
    await this.api.discard(this.bundle.id);
    this.bundle = null;
    await this.refreshInbox();
  }

  parseManualEdit(jsonText: string): EditCommand | null {
    try {
      return JSON.parse(jsonText) as EditCommand;
    } catch {
      this.view.showError("edit must be valid JSON");
      return null;
    }
  }
}
