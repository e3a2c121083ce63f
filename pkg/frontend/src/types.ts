/** Payload shapes of the dispatch service, mirrored verbatim. */

export interface LocationPayload {
  id: number;
  x: number;
  y: number;
}

export interface RouteStopPayload {
  location: LocationPayload;
  request_id: number;
  kind: "pickup" | "dropoff";
  t_est: number;
}

export interface VehiclePayload {
  id: number;
  capacity: number;
  occupancy: number;
  location: LocationPayload;
  route: RouteStopPayload[];
  assigned: number[];
}

export interface RequestPayload {
  id: number;
  t_r: number;
  t_p: number;
  t_d: number;
  l_p: LocationPayload;
  l_d: LocationPayload;
  status: string;
}

export interface ViolationPayload {
  kind: string;
  request_id: number;
  degree: number;
}

export interface StatePayload {
  epoch: number;
  status: string;
  time: number;
  terminal: boolean;
  vehicles: VehiclePayload[];
  outstanding: RequestPayload | null;
  recommended_vehicle: number | null;
  infeasibility: Record<string, ViolationPayload[]> | null;
}

export interface PerVehicleStats {
  feasible: boolean;
  violations: ViolationPayload[];
  visits?: number;
  mean_value?: number;
  total_value?: number;
  forced?: boolean;
}

export interface PlanPayload {
  feasible: boolean;
  epoch: number;
  recommended_vehicle?: number;
  request_id?: number;
  iterations_run?: number;
  tree_nodes?: number;
  per_vehicle?: Record<string, PerVehicleStats>;
  violations_by_vehicle?: Record<string, ViolationPayload[]>;
}

export interface SummaryPayload {
  applicable: number;
  violating: number;
  pct: number;
  avg: number | null;
  min: number | null;
  max: number | null;
  scenarios: number;
}

export interface ComparisonPayload {
  recommended_score: number;
  alternative_score: number;
  service_improvement_pct: number;
  punctuality_improvement_pct: number;
}

export interface ExplanationPayload {
  qtype: "factual" | "contrastive" | "tree_expansion";
  raw_text: string;
  verdicts: Record<string, boolean | "skipped">;
  summaries: Record<string, SummaryPayload | null>;
  text: string;
  template: string;
  slots: Record<string, string | number>;
  comparison?: ComparisonPayload;
  new_iterations?: number;
  error?: string;
}

export interface ApplyPayload {
  epoch: number;
  status: string;
  applied_vehicle: number;
}

export type QueryPayload =
  | { qtype: "factual"; bindings: { passenger: number; action: "pickup" | "dropoff"; direction: "late" | "early" } }
  | { qtype: "contrastive"; bindings: { passenger: number; alt_vehicle: number } }
  | { qtype: "tree_expansion"; bindings: { passenger: number; alt_vehicle: number; budget?: number } };

export interface ServiceError {
  code: string;
  message: string;
  detail?: unknown;
}
