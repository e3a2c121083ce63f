import { ApiError, DispatchApi } from "./api";
import { renderExplanation } from "./explanation";
import { renderMap } from "./map";
import { createQueryForms } from "./queryForm";
import type { QueryPayload, StatePayload, ViolationPayload } from "./types";

/**
 * Wires the console together: scenario intake, the per-epoch loop
 * (plan -> queries -> apply/override), the map and the explanation feed.
 * The server is the single source of truth; the view only redraws from
 * fetched payloads.
 */
export class ConsoleApp {
  private api: DispatchApi;
  private busy = false;

  constructor(
    private root: HTMLElement,
    baseUrl = "",
  ) {
    this.api = new DispatchApi(baseUrl);
  }

  private section(className: string): HTMLElement {
    let node = this.root.querySelector<HTMLElement>(`.${className.split(" ")[0]}`);
    if (!node) {
      node = document.createElement("div");
      node.className = className;
      this.root.appendChild(node);
    }
    return node;
  }

  private note(text: string, isError = false): void {
    const bar = this.section("status-bar");
    bar.textContent = text;
    bar.classList.toggle("status-error", isError);
  }

  private violationText(violations: Record<string, ViolationPayload[]>): string {
    const parts: string[] = [];
    for (const [vehicle, list] of Object.entries(violations)) {
      for (const violation of list) {
        parts.push(`vehicle ${vehicle}: ${violation.kind} by ${violation.degree}`);
      }
    }
    return parts.join("; ");
  }

  async start(scenario: unknown): Promise<void> {
    await this.api.createSession(scenario);
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const state = await this.api.state();
    renderMap(this.section("map-pane"), state);
    this.renderControls(state);
  }

  private renderControls(state: StatePayload): void {
    const controls = this.section("control-pane");
    controls.replaceChildren();
    const heading = document.createElement("h2");
    heading.textContent = `Epoch ${state.epoch} (${state.status})`;
    controls.appendChild(heading);

    if (state.status === "terminal") {
      this.note("Scenario finished.");
      return;
    }
    if (state.status === "awaiting_plan") {
      const planButton = document.createElement("button");
      planButton.className = "plan-button";
      planButton.textContent = "Plan this epoch";
      planButton.addEventListener("click", () => void this.planEpoch());
      controls.appendChild(planButton);
      return;
    }

    // planned: query forms plus accept/override
    createQueryForms(this.section("query-pane"), state, (query) => void this.ask(query));

    const accept = document.createElement("button");
    accept.className = "accept-button";
    accept.textContent = `Accept vehicle ${state.recommended_vehicle}`;
    accept.addEventListener("click", () => void this.applyChoice());
    controls.appendChild(accept);

    const overrideSelect = document.createElement("select");
    overrideSelect.className = "override-vehicle";
    for (const vehicle of state.vehicles) {
      const option = document.createElement("option");
      option.value = String(vehicle.id);
      option.textContent = `vehicle ${vehicle.id}`;
      overrideSelect.appendChild(option);
    }
    const override = document.createElement("button");
    override.className = "override-button";
    override.textContent = "Override with selected vehicle";
    override.addEventListener("click", () =>
      void this.applyChoice(Number(overrideSelect.value)),
    );
    controls.append(overrideSelect, override);
  }

  async planEpoch(): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    try {
      const plan = await this.api.plan();
      if (!plan.feasible) {
        this.note(
          `No feasible assignment this epoch: ${this.violationText(plan.violations_by_vehicle ?? {})}`,
          true,
        );
      } else {
        this.note(
          `Recommended vehicle ${plan.recommended_vehicle} after ${plan.iterations_run} scenarios.`,
        );
      }
      await this.refresh();
    } finally {
      this.busy = false;
    }
  }

  async ask(query: QueryPayload): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    try {
      const explanations = await this.api.submitQueries([query]);
      const feed = this.section("explanation-feed");
      for (const explanation of explanations) {
        renderExplanation(feed, explanation);
      }
    } catch (error) {
      if (error instanceof ApiError) {
        this.note(error.message, true);
      } else {
        throw error;
      }
    } finally {
      this.busy = false;
    }
  }

  async applyChoice(overrideVehicle?: number): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    try {
      const applied = await this.api.apply(overrideVehicle);
      this.note(`Applied vehicle ${applied.applied_vehicle}; now at epoch ${applied.epoch}.`);
      this.section("query-pane").replaceChildren();
      await this.refresh();
    } catch (error) {
      if (error instanceof ApiError && error.payload.code === "constraint_violation") {
        const detail = Array.isArray(error.payload.detail)
          ? (error.payload.detail as ViolationPayload[])
              .map((v) => `${v.kind} by ${v.degree}`)
              .join("; ")
          : "";
        this.note(`Override rejected: ${detail || error.payload.message}`, true);
      } else if (error instanceof ApiError) {
        this.note(error.message, true);
      } else {
        throw error;
      }
    } finally {
      this.busy = false;
    }
  }
}

/** Browser bootstrap: read the scenario from the embedded textarea and start. */
export function mount(root: HTMLElement): void {
  const intake = document.createElement("div");
  intake.className = "scenario-intake";
  const textarea = document.createElement("textarea");
  textarea.className = "scenario-input";
  textarea.rows = 8;
  textarea.placeholder = "Paste a scenario document (JSON) here";
  const start = document.createElement("button");
  start.className = "start-button";
  start.textContent = "Start session";
  intake.append(textarea, start);
  root.appendChild(intake);

  const app = new ConsoleApp(root);
  start.addEventListener("click", () => {
    let scenario: unknown;
    try {
      scenario = JSON.parse(textarea.value);
    } catch {
      textarea.classList.add("invalid");
      return;
    }
    intake.remove();
    void app.start(scenario);
  });
}

declare global {
  interface Window {
    paraplanMount?: typeof mount;
  }
}

if (typeof window !== "undefined") {
  window.paraplanMount = mount;
}
