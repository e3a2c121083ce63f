import type { QueryPayload, StatePayload } from "./types";

export type QueryKind = "factual" | "contrastive" | "tree_expansion";

export interface FactualInput {
  passenger: number;
  action: "pickup" | "dropoff";
  direction: "late" | "early";
}

export interface AlternativeInput {
  passenger: number;
  altVehicle: number;
  budget?: number;
}

/** Translate completed form values into the exact query schema the service accepts. */
export function buildQuery(kind: "factual", input: FactualInput): QueryPayload;
export function buildQuery(kind: "contrastive" | "tree_expansion", input: AlternativeInput): QueryPayload;
export function buildQuery(
  kind: QueryKind,
  input: FactualInput | AlternativeInput,
): QueryPayload {
  if (kind === "factual") {
    const { passenger, action, direction } = input as FactualInput;
    return { qtype: "factual", bindings: { passenger, action, direction } };
  }
  const { passenger, altVehicle, budget } = input as AlternativeInput;
  if (kind === "contrastive") {
    return { qtype: "contrastive", bindings: { passenger, alt_vehicle: altVehicle } };
  }
  const bindings: { passenger: number; alt_vehicle: number; budget?: number } = {
    passenger,
    alt_vehicle: altVehicle,
  };
  if (budget !== undefined) bindings.budget = budget;
  return { qtype: "tree_expansion", bindings };
}

function option(value: string, label?: string): HTMLOptionElement {
  const node = document.createElement("option");
  node.value = value;
  node.textContent = label ?? value;
  return node;
}

function labeled(text: string, control: HTMLElement): HTMLLabelElement {
  const label = document.createElement("label");
  label.textContent = text;
  label.appendChild(control);
  return label;
}

function vehicleSelect(state: StatePayload, className: string): HTMLSelectElement {
  const select = document.createElement("select");
  select.className = className;
  for (const vehicle of state.vehicles) {
    select.appendChild(option(String(vehicle.id), `vehicle ${vehicle.id}`));
  }
  return select;
}

/**
 * The three query forms. Each exposes exactly the template slots of its query
 * family; submission is blocked until every slot has a value.
 */
export function createQueryForms(
  container: HTMLElement,
  state: StatePayload,
  onSubmit: (query: QueryPayload) => void,
): void {
  container.replaceChildren();
  const passengerId = state.outstanding?.id;

  const factual = document.createElement("form");
  factual.className = "query-form factual-form";
  const action = document.createElement("select");
  action.className = "factual-action";
  action.append(option("pickup", "picked up"), option("dropoff", "dropped off"));
  const direction = document.createElement("select");
  direction.className = "factual-direction";
  direction.append(option("late"), option("early"));
  const factualSubmit = document.createElement("button");
  factualSubmit.type = "submit";
  factualSubmit.textContent = "Ask: will the passenger be served on time?";
  factual.append(labeled("event", action), labeled("direction", direction), factualSubmit);
  factual.addEventListener("submit", (event) => {
    event.preventDefault();
    if (passengerId === undefined) return;
    onSubmit(
      buildQuery("factual", {
        passenger: passengerId,
        action: action.value as "pickup" | "dropoff",
        direction: direction.value as "late" | "early",
      }),
    );
  });

  const contrastive = document.createElement("form");
  contrastive.className = "query-form contrastive-form";
  const altVehicle = vehicleSelect(state, "contrastive-vehicle");
  altVehicle.insertBefore(option("", "choose a vehicle"), altVehicle.firstChild);
  altVehicle.value = "";
  const contrastiveSubmit = document.createElement("button");
  contrastiveSubmit.type = "submit";
  contrastiveSubmit.textContent = "Ask: why not this vehicle?";
  contrastive.append(labeled("alternative", altVehicle), contrastiveSubmit);
  contrastive.addEventListener("submit", (event) => {
    event.preventDefault();
    if (passengerId === undefined || altVehicle.value === "") return; // incomplete form
    onSubmit(
      buildQuery("contrastive", {
        passenger: passengerId,
        altVehicle: Number(altVehicle.value),
      }),
    );
  });

  const expansion = document.createElement("form");
  expansion.className = "query-form tree-expansion-form";
  const expansionVehicle = vehicleSelect(state, "expansion-vehicle");
  const budget = document.createElement("input");
  budget.type = "range";
  budget.className = "expansion-budget";
  budget.min = "0";
  budget.max = "200";
  budget.value = "74";
  const budgetReadout = document.createElement("output");
  budgetReadout.className = "expansion-budget-value";
  budgetReadout.textContent = budget.value;
  budget.addEventListener("input", () => {
    budgetReadout.textContent = budget.value;
  });
  const expansionSubmit = document.createElement("button");
  expansionSubmit.type = "submit";
  expansionSubmit.textContent = "Ask: tell me more about this alternative";
  expansion.append(
    labeled("alternative", expansionVehicle),
    labeled("extra scenarios", budget),
    budgetReadout,
    expansionSubmit,
  );
  expansion.addEventListener("submit", (event) => {
    event.preventDefault();
    if (passengerId === undefined) return;
    onSubmit(
      buildQuery("tree_expansion", {
        passenger: passengerId,
        altVehicle: Number(expansionVehicle.value),
        budget: Number(budget.value),
      }),
    );
  });

  container.append(factual, contrastive, expansion);
}
