import { describe, expect, it } from "vitest";

import { renderMap } from "../src/map";
import type { StatePayload } from "../src/types";
import { STATE_FIXTURE } from "./fixtures";

function render(state: StatePayload): HTMLElement {
  const container = document.createElement("div");
  renderMap(container, state);
  return container;
}

describe("renderMap", () => {
  it("draws one marker per vehicle and one passenger marker", () => {
    const container = render(STATE_FIXTURE);
    expect(container.querySelectorAll(".vehicle").length).toBe(3);
    expect(container.querySelectorAll(".passenger-marker").length).toBe(1);
    expect(container.querySelectorAll(".dropoff-marker").length).toBe(1);
    expect(container.querySelectorAll(".route").length).toBe(1); // only vehicle 2 has stops
  });

  it("points the recommendation arrow from the recommended vehicle", () => {
    const container = render(STATE_FIXTURE);
    const arrow = container.querySelector(".recommendation-arrow");
    expect(arrow).not.toBeNull();
    expect(arrow!.getAttribute("x1")).toBe("2");
    expect(arrow!.getAttribute("y1")).toBe("2");
    expect(arrow!.getAttribute("x2")).toBe("5");
    expect(arrow!.getAttribute("y2")).toBe("9");
  });

  it("omits the arrow when nothing is recommended yet", () => {
    const container = render({ ...STATE_FIXTURE, recommended_vehicle: null });
    expect(container.querySelector(".recommendation-arrow")).toBeNull();
  });

  it("shows a badge per vehicle with reported violations", () => {
    const withViolations: StatePayload = {
      ...STATE_FIXTURE,
      recommended_vehicle: null,
      infeasibility: {
        "1": [{ kind: "capacity", request_id: 1, degree: 2 }],
        "2": [
          { kind: "capacity", request_id: 1, degree: 1 },
          { kind: "en_route_time", request_id: 1, degree: 7 },
        ],
      },
    };
    const container = render(withViolations);
    expect(container.querySelectorAll(".violation-badge").length).toBe(2);
    expect(container.querySelector(".badge-v1")).not.toBeNull();
    const counts = Array.from(container.querySelectorAll(".violation-count")).map(
      (n) => n.textContent,
    );
    expect(counts).toContain("1");
    expect(counts).toContain("2");
  });

  it("renders an error banner for a malformed payload", () => {
    const container = render({} as StatePayload);
    expect(container.querySelector(".error-banner")).not.toBeNull();
    expect(container.querySelector("svg")).toBeNull();
  });
});
