"""Scenario documents: JSON schema validation and initial-state construction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .model import Location, ModelConfig, Request, State, Vehicle

_CONFIG_DEFAULTS = {
    "T_max": 45,
    "t_a": 10,
    "gamma1": 1.0,
    "gamma2": 0.1,
    "gamma3": 0.1,
    "discount": 0.95,
    "arrival_rate": 6.0,
    "horizon": 480,
    "minutes_per_unit": 1.0,
}

_CONFIG_OPTIONAL = {
    "v_rt": "reasonable_route_minutes",
    "theta_d": "reasonable_stops",
    "day_start_minutes": "day_start_minutes",
}


@dataclass
class Scenario:
    locations: dict[int, Location]
    vehicles: list[Vehicle]
    requests: list[Request]
    config: ModelConfig
    seed: int
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def models_fuel(self) -> bool:
        return any(v.fuel is not None for v in self.vehicles)


def _require(doc: dict, key: str, parent: str = "") -> object:
    path = f"{parent}.{key}" if parent else key
    if key not in doc:
        raise ValidationError(path, "missing required field")
    return doc[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, f"expected a number, got {type(value).__name__}")
    return value


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(path, f"expected an integer, got {type(value).__name__}")
    return value


def load_scenario(source: str | Path | dict) -> Scenario:
    """Parse and validate a scenario document (path, JSON text, or parsed dict)."""
    if isinstance(source, dict):
        doc = source
    else:
        path = Path(source)
        try:
            is_file = path.is_file()
        except OSError:
            is_file = False
        text = path.read_text(encoding="utf-8") if is_file else str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError("$", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("$", "scenario document must be a JSON object")
    return parse_scenario(doc)


def parse_scenario(doc: dict) -> Scenario:
    locations: dict[int, Location] = {}
    raw_locations = _require(doc, "locations")
    if not isinstance(raw_locations, list) or not raw_locations:
        raise ValidationError("locations", "must be a non-empty list")
    for i, entry in enumerate(raw_locations):
        path = f"locations[{i}]"
        lid = _integer(_require(entry, "id", path), f"{path}.id")
        if lid in locations:
            raise ValidationError(f"{path}.id", f"duplicate location id {lid}")
        x = _number(entry.get("display_x", 0.0), f"{path}.display_x")
        y = _number(entry.get("display_y", 0.0), f"{path}.display_y")
        locations[lid] = Location(lid, x, y)

    matrix = None
    if "travel_matrix" in doc and doc["travel_matrix"] is not None:
        raw_matrix = doc["travel_matrix"]
        if not isinstance(raw_matrix, dict):
            raise ValidationError("travel_matrix", "must be an object of objects")
        matrix = {}
        for src, row in raw_matrix.items():
            try:
                src_id = int(src)
            except ValueError:
                raise ValidationError(f"travel_matrix.{src}", "keys must be location ids")
            if src_id not in locations:
                raise ValidationError(f"travel_matrix.{src}", f"unknown location id {src_id}")
            if not isinstance(row, dict):
                raise ValidationError(f"travel_matrix.{src}", "must map destination id to minutes")
            for dst, minutes in row.items():
                try:
                    dst_id = int(dst)
                except ValueError:
                    raise ValidationError(f"travel_matrix.{src}.{dst}", "keys must be location ids")
                if dst_id not in locations:
                    raise ValidationError(f"travel_matrix.{src}.{dst}", f"unknown location id {dst_id}")
                matrix[(src_id, dst_id)] = _integer(minutes, f"travel_matrix.{src}.{dst}")

    raw_config = doc.get("config", {})
    if not isinstance(raw_config, dict):
        raise ValidationError("config", "must be an object")
    cfg_kwargs = {}
    for key, default in _CONFIG_DEFAULTS.items():
        value = raw_config.get(key, default)
        cfg_kwargs[key] = _number(value, f"config.{key}")
        if cfg_kwargs[key] <= 0:
            raise ValidationError(f"config.{key}", "must be positive")
    if cfg_kwargs["discount"] > 1:
        raise ValidationError("config.discount", "must be at most 1")
    for key in ("T_max", "t_a", "horizon"):
        cfg_kwargs[key] = int(cfg_kwargs[key])
    optional = {}
    for key, attr in _CONFIG_OPTIONAL.items():
        if key in raw_config:
            optional[attr] = _integer(raw_config[key], f"config.{key}")
    cfg = ModelConfig.with_locations(
        sorted(locations.values(), key=lambda l: l.id),
        travel_matrix=matrix,
        **cfg_kwargs,
        **optional,
    )

    vehicles: list[Vehicle] = []
    raw_vehicles = _require(doc, "vehicles")
    if not isinstance(raw_vehicles, list) or not raw_vehicles:
        raise ValidationError("vehicles", "must be a non-empty list")
    seen_vehicles = set()
    for i, entry in enumerate(raw_vehicles):
        path = f"vehicles[{i}]"
        vid = _integer(_require(entry, "id", path), f"{path}.id")
        if vid in seen_vehicles:
            raise ValidationError(f"{path}.id", f"duplicate vehicle id {vid}")
        seen_vehicles.add(vid)
        capacity = _integer(_require(entry, "capacity", path), f"{path}.capacity")
        if capacity < 0:
            raise ValidationError(f"{path}.capacity", "must be non-negative")
        loc_id = _integer(_require(entry, "location", path), f"{path}.location")
        if loc_id not in locations:
            raise ValidationError(f"{path}.location", f"unknown location id {loc_id}")
        fuel = entry.get("fuel_tank")
        if fuel is not None:
            fuel = _integer(fuel, f"{path}.fuel_tank")
        vehicles.append(Vehicle(vid, capacity, location=locations[loc_id], fuel=fuel))
    vehicles.sort(key=lambda v: v.id)

    requests: list[Request] = []
    raw_requests = _require(doc, "requests")
    if not isinstance(raw_requests, list):
        raise ValidationError("requests", "must be a list")
    seen_requests = set()
    for i, entry in enumerate(raw_requests):
        path = f"requests[{i}]"
        rid = _integer(_require(entry, "id", path), f"{path}.id")
        if rid in seen_requests:
            raise ValidationError(f"{path}.id", f"duplicate request id {rid}")
        seen_requests.add(rid)
        t_r = _integer(_require(entry, "t_r", path), f"{path}.t_r")
        t_p = _integer(_require(entry, "t_p", path), f"{path}.t_p")
        t_d = _integer(_require(entry, "t_d", path), f"{path}.t_d")
        if not t_r <= t_p <= t_d:
            raise ValidationError(path, f"times must satisfy t_r <= t_p <= t_d, got ({t_r}, {t_p}, {t_d})")
        for key in ("l_p", "l_d"):
            if _integer(_require(entry, key, path), f"{path}.{key}") not in locations:
                raise ValidationError(f"{path}.{key}", f"unknown location id {entry[key]}")
        requests.append(
            Request(rid, t_r=t_r, t_p=t_p, t_d=t_d, l_p=locations[entry["l_p"]], l_d=locations[entry["l_d"]])
        )
    requests.sort(key=lambda r: (r.t_r, r.id))

    seed = doc.get("seed", 0)
    seed = _integer(seed, "seed")

    return Scenario(locations=locations, vehicles=vehicles, requests=requests, config=cfg, seed=seed, raw=doc)


def initial_state(scenario: Scenario) -> State:
    """Epoch-0 state: vehicles at their depots, first scenario request outstanding."""
    vehicles = [v.copy() for v in scenario.vehicles]
    if scenario.requests:
        first = scenario.requests[0].copy()
        return State(
            time=first.t_r,
            vehicles=vehicles,
            outstanding=first,
            requests={first.id: first},
        )
    return State(time=0, vehicles=vehicles)
