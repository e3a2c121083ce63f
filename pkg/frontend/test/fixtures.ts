import type { ExplanationPayload, StatePayload } from "../src/types";

export const STATE_FIXTURE: StatePayload = {
  epoch: 0,
  status: "planned",
  time: 300,
  terminal: false,
  vehicles: [
    { id: 1, capacity: 8, occupancy: 0, location: { id: 1, x: 2, y: 2 }, route: [], assigned: [] },
    {
      id: 2,
      capacity: 8,
      occupancy: 1,
      location: { id: 2, x: 18, y: 3 },
      route: [
        { location: { id: 5, x: 14, y: 11 }, request_id: 9, kind: "dropoff", t_est: 320 },
      ],
      assigned: [9],
    },
    { id: 3, capacity: 8, occupancy: 0, location: { id: 3, x: 9, y: 16 }, route: [], assigned: [] },
  ],
  outstanding: {
    id: 1,
    t_r: 300,
    t_p: 315,
    t_d: 333,
    l_p: { id: 4, x: 5, y: 9 },
    l_d: { id: 5, x: 14, y: 11 },
    status: "waiting",
  },
  recommended_vehicle: 1,
  infeasibility: null,
};

export const EXPLANATION_FIXTURE: ExplanationPayload = {
  qtype: "factual",
  raw_text:
    "Based on the current vehicle assignment, is it expected that passenger 1 will be dropped off late?",
  verdicts: { phi2: false },
  summaries: {
    phi2: { applicable: 30, violating: 3, pct: 10.0, avg: 23.0, min: 19.0, max: 27.0, scenarios: 150 },
  },
  text:
    "The passenger has specified a desired drop-off time of 5:33 PM. In order to determine the most efficient route, the Monte Carlo Tree Search (MCTS) route planning algorithm simulates approximately 150 potential future scenarios and requests. This thorough exploration helps the algorithm to make an informed recommendation.\n\nPotential Late Arrival: Based on the extensive set of scenarios examined by MCTS, there's a chance that the passenger might encounter a delay in their drop-off time. This anticipated delay averages around 23 minutes. The primary reason for this delay is that the proposed vehicle is expected to make stops at about 4 other locations prior to reaching the passenger's drop-off point. However, the delay can be as short as 19 minutes or extend up to 27 minutes. The percentage of times the suggested vehicle doesn't meet the desired drop-off time is about 10%.",
  template: "factual_late_violated",
  slots: {
    event_noun: "drop-off",
    desired_time: "5:33 PM",
    scenario_count: 150,
    avg_degree: 23.0,
    stop_count: 4,
    min_degree: 19.0,
    max_degree: 27.0,
    violation_pct: 10.0,
  },
};

export const SCENARIO_FIXTURE = {
  locations: [
    { id: 1, display_x: 2, display_y: 2 },
    { id: 2, display_x: 18, display_y: 3 },
    { id: 3, display_x: 9, display_y: 16 },
    { id: 4, display_x: 5, display_y: 9 },
    { id: 5, display_x: 14, display_y: 11 },
    { id: 6, display_x: 11, display_y: 5 },
    { id: 7, display_x: 3, display_y: 14 },
    { id: 8, display_x: 16, display_y: 15 },
  ],
  vehicles: [
    { id: 1, capacity: 8, location: 1 },
    { id: 2, capacity: 8, location: 2 },
    { id: 3, capacity: 8, location: 3 },
  ],
  requests: [
    { id: 1, t_r: 300, t_p: 315, t_d: 333, l_p: 4, l_d: 5 },
    { id: 2, t_r: 312, t_p: 325, t_d: 350, l_p: 6, l_d: 7 },
    { id: 3, t_r: 326, t_p: 340, t_d: 368, l_p: 8, l_d: 1 },
  ],
  config: {
    T_max: 45,
    t_a: 10,
    gamma1: 1.0,
    gamma2: 0.1,
    gamma3: 0.1,
    discount: 0.95,
    arrival_rate: 6,
    horizon: 480,
    minutes_per_unit: 1,
  },
  seed: 20240471,
};

/** Digit groups (integers or decimals) appearing in rendered text. */
export function numbersIn(text: string): string[] {
  return text.match(/\d+(?:\.\d+)?/g) ?? [];
}
