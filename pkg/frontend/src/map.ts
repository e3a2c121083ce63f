import type { StatePayload, VehiclePayload } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";
const VEHICLE_COLORS = ["#1f77b4", "#2ca02c", "#d62728", "#ff7f0e", "#9467bd", "#8c564b"];

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

function extent(state: StatePayload): { minX: number; minY: number; maxX: number; maxY: number } {
  const xs: number[] = [];
  const ys: number[] = [];
  const push = (p: { x: number; y: number }) => {
    xs.push(p.x);
    ys.push(p.y);
  };
  for (const vehicle of state.vehicles) {
    push(vehicle.location);
    vehicle.route.forEach((s) => push(s.location));
  }
  if (state.outstanding) {
    push(state.outstanding.l_p);
    push(state.outstanding.l_d);
  }
  if (xs.length === 0) return { minX: 0, minY: 0, maxX: 1, maxY: 1 };
  return {
    minX: Math.min(...xs) - 2,
    minY: Math.min(...ys) - 2,
    maxX: Math.max(...xs) + 2,
    maxY: Math.max(...ys) + 2,
  };
}

function vehicleColor(index: number): string {
  return VEHICLE_COLORS[index % VEHICLE_COLORS.length];
}

function drawVehicle(
  svg: SVGSVGElement,
  vehicle: VehiclePayload,
  color: string,
  violations: number,
): void {
  const { x, y } = vehicle.location;
  if (vehicle.route.length > 0) {
    const points = [`${x},${y}`, ...vehicle.route.map((s) => `${s.location.x},${s.location.y}`)];
    svg.appendChild(
      svgEl("polyline", {
        points: points.join(" "),
        fill: "none",
        stroke: color,
        "stroke-width": 0.25,
        "stroke-dasharray": "0.8 0.5",
        class: `route route-v${vehicle.id}`,
      }),
    );
  }
  const marker = svgEl("rect", {
    x: x - 1,
    y: y - 1,
    width: 2,
    height: 2,
    fill: color,
    class: `vehicle vehicle-${vehicle.id}`,
  });
  svg.appendChild(marker);
  const label = svgEl("text", { x: x + 1.3, y: y - 1.1, "font-size": 1.6, class: "vehicle-label" });
  label.textContent = `v${vehicle.id}`;
  svg.appendChild(label);
  if (violations > 0) {
    const badge = svgEl("circle", {
      cx: x - 1.4,
      cy: y - 1.4,
      r: 1,
      fill: "#c0392b",
      class: `violation-badge badge-v${vehicle.id}`,
    });
    svg.appendChild(badge);
    const count = svgEl("text", {
      x: x - 1.85,
      y: y - 0.95,
      "font-size": 1.3,
      fill: "#fff",
      class: "violation-count",
    });
    count.textContent = String(violations);
    svg.appendChild(count);
  }
}

/**
 * Draw the epoch scene: vehicles with planned routes, the outstanding request,
 * the recommendation arrow and per-vehicle violation badges. The container is
 * cleared first. A payload that does not look like a state snapshot produces
 * an error banner instead of a scene.
 */
export function renderMap(container: HTMLElement, state: StatePayload): void {
  container.replaceChildren();
  if (!state || !Array.isArray(state.vehicles)) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = "State payload does not match the expected schema.";
    container.appendChild(banner);
    return;
  }
  const box = extent(state);
  const svg = svgEl("svg", {
    viewBox: `${box.minX} ${box.minY} ${box.maxX - box.minX} ${box.maxY - box.minY}`,
    class: "dispatch-map",
  });
  svg.setAttribute("data-epoch", String(state.epoch));

  state.vehicles.forEach((vehicle, index) => {
    const violations = state.infeasibility?.[String(vehicle.id)]?.length ?? 0;
    drawVehicle(svg, vehicle, vehicleColor(index), violations);
  });

  const request = state.outstanding;
  if (request) {
    const pickup = svgEl("circle", {
      cx: request.l_p.x,
      cy: request.l_p.y,
      r: 1.1,
      fill: "#111",
      class: "passenger-marker",
    });
    svg.appendChild(pickup);
    const label = svgEl("text", {
      x: request.l_p.x + 1.4,
      y: request.l_p.y + 0.4,
      "font-size": 1.6,
      class: "passenger-label",
    });
    label.textContent = `r${request.id}`;
    svg.appendChild(label);
    const dropoff = svgEl("rect", {
      x: request.l_d.x - 0.8,
      y: request.l_d.y - 0.8,
      width: 1.6,
      height: 1.6,
      fill: "none",
      stroke: "#111",
      "stroke-width": 0.25,
      class: "dropoff-marker",
    });
    svg.appendChild(dropoff);

    if (state.recommended_vehicle !== null) {
      const vehicle = state.vehicles.find((v) => v.id === state.recommended_vehicle);
      if (vehicle) {
        svg.appendChild(
          svgEl("line", {
            x1: vehicle.location.x,
            y1: vehicle.location.y,
            x2: request.l_p.x,
            y2: request.l_p.y,
            stroke: "#111",
            "stroke-width": 0.35,
            "marker-end": "url(#arrowhead)",
            class: "recommendation-arrow",
          }),
        );
      }
    }
  }

  const defs = svgEl("defs", {});
  const arrow = svgEl("marker", {
    id: "arrowhead",
    viewBox: "0 0 10 10",
    refX: 9,
    refY: 5,
    markerWidth: 6,
    markerHeight: 6,
    orient: "auto-start-reverse",
  });
  arrow.appendChild(svgEl("path", { d: "M 0 0 L 10 5 L 0 10 z", fill: "#111" }));
  defs.appendChild(arrow);
  svg.appendChild(defs);

  container.appendChild(svg);
}
