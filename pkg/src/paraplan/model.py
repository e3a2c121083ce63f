"""Paratransit dispatch MDP: requests, vehicles, insertion actions, transitions, reward.

All operations are pure functions of their inputs; state-changing operations
return fresh State objects (the caller's state is never mutated). Times are
integer minutes; sub-minute effects are rounded half-up.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import ConstraintError, InvalidInputError, InvalidStateError


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves toward positive infinity."""
    return math.floor(x + 0.5)


class RequestStatus(str, Enum):
    WAITING = "waiting"
    ASSIGNED = "assigned"
    IN_TRANSIT = "in-transit"
    DROPPED_OFF = "dropped-off"


# forward-only lifecycle; indices are used to assert no regression
STATUS_ORDER = {
    RequestStatus.WAITING: 0,
    RequestStatus.ASSIGNED: 1,
    RequestStatus.IN_TRANSIT: 2,
    RequestStatus.DROPPED_OFF: 3,
}


class StopKind(str, Enum):
    PICKUP = "pickup"
    DROPOFF = "dropoff"


@dataclass(frozen=True)
class Location:
    id: int
    display_x: float = 0.0
    display_y: float = 0.0


@dataclass
class Request:
    """A trip request: requested times, endpoints, and realized service times."""

    id: int
    t_r: int
    t_p: int
    t_d: int
    l_p: Location
    l_d: Location
    status: RequestStatus = RequestStatus.WAITING
    actual_pickup: int | None = None
    actual_dropoff: int | None = None
    assigned_vehicle: int | None = None

    def copy(self) -> "Request":
        return replace(self)


@dataclass(frozen=True)
class RouteStop:
    location: Location
    request_id: int
    kind: StopKind
    t_est: int = 0


@dataclass
class Vehicle:
    id: int
    capacity: int
    occupancy: int = 0
    location: Location = Location(0)
    route: list[RouteStop] = field(default_factory=list)
    assigned: list[int] = field(default_factory=list)
    fuel: int | None = None

    def copy(self) -> "Vehicle":
        return Vehicle(
            id=self.id,
            capacity=self.capacity,
            occupancy=self.occupancy,
            location=self.location,
            route=list(self.route),
            assigned=list(self.assigned),
            fuel=self.fuel,
        )


@dataclass
class State:
    """Snapshot of the dispatch world at one decision epoch."""

    time: int
    vehicles: list[Vehicle]
    outstanding: Request | None = None
    requests: dict[int, Request] = field(default_factory=dict)
    terminal: bool = False

    def clone(self) -> "State":
        requests = {rid: r.copy() for rid, r in self.requests.items()}
        outstanding = requests.get(self.outstanding.id) if self.outstanding else None
        return State(
            time=self.time,
            vehicles=[v.copy() for v in self.vehicles],
            outstanding=outstanding,
            requests=requests,
            terminal=self.terminal,
        )

    def vehicle(self, vehicle_id: int) -> Vehicle:
        for v in self.vehicles:
            if v.id == vehicle_id:
                return v
        raise InvalidInputError(f"unknown vehicle id {vehicle_id}")


@dataclass(frozen=True)
class Action:
    """Insert a request's pickup/dropoff into one vehicle's route.

    ``pickup_index``/``dropoff_index`` are positions in the pre-insertion route:
    the pickup goes before old index i, the dropoff before old index j (i <= j),
    so the dropoff ends up right after the pickup when i == j.
    """

    request_id: int
    vehicle_id: int
    pickup_index: int
    dropoff_index: int


@dataclass(frozen=True)
class ConstraintViolation:
    kind: str  # "capacity" | "en_route_time"
    vehicle_id: int
    request_id: int
    degree: float


@dataclass(frozen=True)
class ModelConfig:
    """Planning constants plus scenario wiring (locations, optional travel matrix)."""

    T_max: int = 45
    t_a: int = 10
    minutes_per_unit: float = 1.0
    gamma1: float = 1.0
    gamma2: float = 0.1
    gamma3: float = 0.1
    discount: float = 0.95
    arrival_rate: float = 6.0  # expected requests per hour
    horizon: int = 480
    reasonable_route_minutes: int = 90   # soundness bound on remaining route time
    reasonable_stops: int = 8            # soundness bound on pending stops
    day_start_minutes: int = 720         # minute 0 of a scenario = 12:00 PM
    locations: tuple[Location, ...] = ()
    location_ids: frozenset[int] = frozenset()
    travel_matrix: dict[tuple[int, int], int] | None = None

    @staticmethod
    def with_locations(locations, **kwargs) -> "ModelConfig":
        locs = tuple(locations)
        return ModelConfig(
            locations=locs,
            location_ids=frozenset(l.id for l in locs),
            **kwargs,
        )


def travel_time(a: Location, b: Location, cfg: ModelConfig) -> int:
    """Minutes to travel a -> b: matrix entry if present, else Manhattan distance."""
    if cfg.location_ids:
        if a.id not in cfg.location_ids:
            raise InvalidInputError(f"unknown location id {a.id}")
        if b.id not in cfg.location_ids:
            raise InvalidInputError(f"unknown location id {b.id}")
    if a.id == b.id:
        return 0
    if cfg.travel_matrix is not None:
        entry = cfg.travel_matrix.get((a.id, b.id))
        if entry is not None:
            return int(entry)
    dist = abs(a.display_x - b.display_x) + abs(a.display_y - b.display_y)
    return round_half_up(dist * cfg.minutes_per_unit)


def estimate_route_times(vehicle: Vehicle, now: int, cfg: ModelConfig) -> list[RouteStop]:
    """Recompute each stop's estimated arrival by summing legs from the vehicle's position."""
    out: list[RouteStop] = []
    t = now
    prev = vehicle.location
    for stop in vehicle.route:
        t += travel_time(prev, stop.location, cfg)
        out.append(replace(stop, t_est=t))
        prev = stop.location
    return out


def _path_minutes(origin: Location, stops: list[Location], cfg: ModelConfig) -> int:
    total = 0
    prev = origin
    for loc in stops:
        total += travel_time(prev, loc, cfg)
        prev = loc
    return total


def best_insertion(
    vehicle: Vehicle, request: Request, now: int, cfg: ModelConfig
) -> tuple[Action, int]:
    """Cheapest (pickup, dropoff) insertion pair for this vehicle.

    Enumerates every index pair i <= j over the current route and returns the
    pair adding the least travel time; ties go to the lexicographically
    smallest pair. Feasibility is not checked here.
    """
    base = [s.location for s in vehicle.route]
    base_cost = _path_minutes(vehicle.location, base, cfg)
    n = len(base)
    best: tuple[int, int] | None = None
    best_cost = 0
    for i in range(n + 1):
        for j in range(i, n + 1):
            cand = base[:i] + [request.l_p] + base[i:j] + [request.l_d] + base[j:]
            cost = _path_minutes(vehicle.location, cand, cfg) - base_cost
            if best is None or cost < best_cost:
                best = (i, j)
                best_cost = cost
    assert best is not None
    return Action(request.id, vehicle.id, best[0], best[1]), best_cost


def _inserted_stops(vehicle: Vehicle, request: Request, action: Action) -> list[RouteStop]:
    i, j = action.pickup_index, action.dropoff_index
    if not (0 <= i <= j <= len(vehicle.route)):
        raise InvalidInputError(
            f"insertion indices ({i}, {j}) out of bounds for route of length {len(vehicle.route)}"
        )
    pickup = RouteStop(request.l_p, request.id, StopKind.PICKUP)
    dropoff = RouteStop(request.l_d, request.id, StopKind.DROPOFF)
    return vehicle.route[:i] + [pickup] + vehicle.route[i:j] + [dropoff] + vehicle.route[j:]


def _resolve(state: State, action: Action) -> tuple[Vehicle, Request]:
    vehicle = state.vehicle(action.vehicle_id)
    request = state.requests.get(action.request_id)
    if request is None:
        raise InvalidInputError(f"unknown request id {action.request_id}")
    return vehicle, request


def check_hard_constraints(
    state: State, action: Action, cfg: ModelConfig
) -> list[ConstraintViolation]:
    """Simulate the post-insertion route; report capacity and en-route-time breaches.

    An empty list means the action is feasible.
    """
    vehicle, request = _resolve(state, action)
    stops = _inserted_stops(vehicle, request, action)
    timed = estimate_route_times(
        Vehicle(vehicle.id, vehicle.capacity, location=vehicle.location, route=stops),
        state.time,
        cfg,
    )

    violations: list[ConstraintViolation] = []

    occ = vehicle.occupancy
    peak = occ
    for stop in timed:
        occ += 1 if stop.kind == StopKind.PICKUP else -1
        peak = max(peak, occ)
    if peak > vehicle.capacity:
        violations.append(
            ConstraintViolation("capacity", vehicle.id, action.request_id, peak - vehicle.capacity)
        )

    pickup_at = {s.request_id: s.t_est for s in timed if s.kind == StopKind.PICKUP}
    for stop in timed:
        if stop.kind != StopKind.DROPOFF:
            continue
        rider = state.requests.get(stop.request_id)
        if stop.request_id in pickup_at:
            boarded = pickup_at[stop.request_id]
        elif rider is not None and rider.actual_pickup is not None:
            boarded = rider.actual_pickup
        else:
            continue
        en_route = stop.t_est - boarded
        if en_route > cfg.T_max:
            violations.append(
                ConstraintViolation("en_route_time", vehicle.id, stop.request_id, en_route - cfg.T_max)
            )
    return violations


def feasible_actions(state: State, cfg: ModelConfig) -> list[Action]:
    """Best insertion per vehicle, minus those breaking hard constraints."""
    if state.outstanding is None:
        raise InvalidStateError("state has no outstanding request")
    actions = []
    for vehicle in sorted(state.vehicles, key=lambda v: v.id):
        action, _ = best_insertion(vehicle, state.outstanding, state.time, cfg)
        if not check_hard_constraints(state, action, cfg):
            actions.append(action)
    return actions


def infeasibility_report(state: State, cfg: ModelConfig) -> dict[int, list[ConstraintViolation]]:
    """Per-vehicle violations of each vehicle's best insertion (diagnostic payload)."""
    if state.outstanding is None:
        raise InvalidStateError("state has no outstanding request")
    report = {}
    for vehicle in sorted(state.vehicles, key=lambda v: v.id):
        action, _ = best_insertion(vehicle, state.outstanding, state.time, cfg)
        report[vehicle.id] = check_hard_constraints(state, action, cfg)
    return report


def apply_action(state: State, action: Action, cfg: ModelConfig, force: bool = False) -> State:
    """Assign the outstanding request per ``action``; returns the successor state.

    With ``force`` the assignment happens even when hard constraints are
    violated (used to materialize what-if branches); otherwise a violating
    action raises ConstraintError.
    """
    _resolve(state, action)
    if not force:
        violations = check_hard_constraints(state, action, cfg)
        if violations:
            raise ConstraintError(violations)
    ns = state.clone()
    vehicle = ns.vehicle(action.vehicle_id)
    request = ns.requests[action.request_id]
    vehicle.route = _inserted_stops(vehicle, request, action)
    vehicle.route = estimate_route_times(vehicle, ns.time, cfg)
    vehicle.assigned.append(request.id)
    request.status = RequestStatus.ASSIGNED
    request.assigned_vehicle = vehicle.id
    if ns.outstanding is not None and ns.outstanding.id == request.id:
        ns.outstanding = None
    return ns


def _playback(state: State, until: int, cfg: ModelConfig) -> None:
    """Advance vehicles along their routes, realizing stops scheduled by ``until``."""
    for vehicle in state.vehicles:
        while vehicle.route and vehicle.route[0].t_est <= until:
            stop = vehicle.route.pop(0)
            if vehicle.fuel is not None:
                vehicle.fuel -= travel_time(vehicle.location, stop.location, cfg)
            vehicle.location = stop.location
            rider = state.requests[stop.request_id]
            if stop.kind == StopKind.PICKUP:
                vehicle.occupancy += 1
                rider.status = RequestStatus.IN_TRANSIT
                rider.actual_pickup = stop.t_est
            else:
                vehicle.occupancy -= 1
                rider.status = RequestStatus.DROPPED_OFF
                rider.actual_dropoff = stop.t_est
                if stop.request_id in vehicle.assigned:
                    vehicle.assigned.remove(stop.request_id)
    state.time = until


def advance_to(state: State, new_time: int, cfg: ModelConfig) -> State:
    """Pure time advance: play back routes up to ``new_time``, no new request."""
    ns = state.clone()
    _playback(ns, new_time, cfg)
    return ns


def transition(state: State, rng_seed: int, cfg: ModelConfig) -> State:
    """Advance to the next decision epoch and sample the new predicted request.

    Deterministic given ``rng_seed``. Inter-arrival gaps are exponential at
    ``cfg.arrival_rate`` per hour (minimum one minute); the sampled request has
    uniform endpoints, a pickup window 5-30 minutes out, and a drop-off target
    of pickup + direct travel + ``cfg.t_a``. Beyond the horizon the returned
    state is flagged terminal and carries no outstanding request.
    """
    if state.outstanding is not None:
        raise InvalidStateError("outstanding request must be resolved before transition")
    rng = random.Random(rng_seed)
    gap = max(1, round_half_up(rng.expovariate(cfg.arrival_rate / 60.0)))
    arrival = state.time + gap
    if arrival > cfg.horizon:
        ns = state.clone()
        _playback(ns, cfg.horizon, cfg)
        ns.terminal = True
        return ns
    ns = state.clone()
    _playback(ns, arrival, cfg)
    if not cfg.locations:
        raise InvalidStateError("config carries no locations to sample requests from")
    l_p = rng.choice(cfg.locations)
    others = [l for l in cfg.locations if l.id != l_p.id]
    l_d = rng.choice(others) if others else l_p
    t_p = arrival + round_half_up(rng.uniform(5.0, 30.0))
    t_d = t_p + travel_time(l_p, l_d, cfg) + cfg.t_a
    rid = max(ns.requests, default=0) + 1
    request = Request(rid, t_r=arrival, t_p=t_p, t_d=t_d, l_p=l_p, l_d=l_d)
    ns.requests[rid] = request
    ns.outstanding = request
    return ns


def _estimated_event_time(state: State, request: Request, kind: StopKind) -> int | None:
    if request.assigned_vehicle is None:
        return None
    for vehicle in state.vehicles:
        if vehicle.id != request.assigned_vehicle:
            continue
        for stop in vehicle.route:
            if stop.request_id == request.id and stop.kind == kind:
                return stop.t_est
    return None


def reward_breakdown(state: State, cfg: ModelConfig) -> tuple[float, float]:
    """(service-rate term, punctuality terms) of the objective, evaluated on ``state``.

    The service-rate term is the served fraction of every request assigned in
    the episode; the punctuality terms are the signed pickup and drop-off
    deviations of served requests (early positive, late negative). Realized
    times are used where available, route estimates otherwise.
    """
    assigned = [r for r in state.requests.values() if r.status != RequestStatus.WAITING]
    served = [r for r in assigned if r.status != RequestStatus.ASSIGNED]
    dropped = [r for r in served if r.status == RequestStatus.DROPPED_OFF]

    service = cfg.gamma1 * (len(served) / len(assigned)) if assigned else 0.0

    pickup_dev = 0.0
    for r in served:
        boarded = r.actual_pickup
        if boarded is None:
            boarded = _estimated_event_time(state, r, StopKind.PICKUP)
        if boarded is None:
            boarded = r.t_p
        pickup_dev += r.t_p - boarded

    dropoff_dev = 0.0
    for r in dropped:
        alighted = r.actual_dropoff
        if alighted is None:
            alighted = _estimated_event_time(state, r, StopKind.DROPOFF)
        if alighted is None:
            alighted = r.t_d
        dropoff_dev += r.t_d - alighted

    return service, cfg.gamma2 * pickup_dev + cfg.gamma3 * dropoff_dev


def reward(state: State, action: Action | None = None, cfg: ModelConfig | None = None) -> float:
    """Objective value of the (post-action) state. ``action`` is accepted for
    signature symmetry; the evaluation depends only on the state."""
    assert cfg is not None
    service, punctuality = reward_breakdown(state, cfg)
    return service + punctuality
