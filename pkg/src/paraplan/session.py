"""Decision-epoch sessions: one scenario, one live planning loop.

A session walks the scenario's request stream one epoch at a time:
plan -> (optional queries) -> apply -> next epoch. Scripted scenario requests
are consumed first; once exhausted, new epochs draw sampled requests. All
randomness is derived from the scenario seed, so a replay with the same
scenario and parameters reproduces every response.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NoFeasibleActionError, SessionStateError
from .explain import ExplainParams, Explanation, Query, handle_queries, instantiate_query
from .mcts import SearchParams, SearchTree, export_labeled_tree, LabelContext, mix_seed, plan
from .model import (
    Action,
    ModelConfig,
    State,
    advance_to,
    apply_action,
    best_insertion,
    infeasibility_report,
    transition,
)
from .scenario import Scenario, initial_state


@dataclass
class EpochOutcome:
    """What happened in one applied epoch (fed into simulation metrics)."""

    epoch: int
    time: int
    request_id: int | None
    vehicle_id: int | None
    feasible: bool
    forced: bool = False


@dataclass
class Session:
    scenario: Scenario
    search_params: SearchParams = None  # type: ignore[assignment]
    explain_params: ExplainParams = None  # type: ignore[assignment]
    id: str = ""
    epoch: int = 0
    status: str = "awaiting_plan"  # awaiting_plan | planned | applied | terminal
    current_state: State = None  # type: ignore[assignment]
    current_tree: SearchTree | None = None
    recommendation: Action | None = None
    last_infeasibility: dict | None = None
    history: list[EpochOutcome] = field(default_factory=list)
    _pending: list = field(default_factory=list)

    def __post_init__(self):
        if self.search_params is None:
            self.search_params = SearchParams(seed=self.scenario.seed)
        if self.explain_params is None:
            self.explain_params = ExplainParams(seed=self.scenario.seed)
        if self.current_state is None:
            self.current_state = initial_state(self.scenario)
            self._pending = [r.copy() for r in self.scenario.requests[1:]]
            if self.current_state.outstanding is None:
                self.status = "terminal"
                self.current_state.terminal = True

    @property
    def config(self) -> ModelConfig:
        return self.scenario.config

    @property
    def models_fuel(self) -> bool:
        return self.scenario.models_fuel

    def _epoch_seed(self, *salts: int) -> int:
        return mix_seed(self.search_params.seed, self.epoch, *salts)

    # -- planning -----------------------------------------------------------

    def plan_epoch(self, overrides: dict | None = None) -> dict:
        """Run the search for the current epoch; returns the recommendation payload."""
        if self.status not in ("awaiting_plan",):
            raise SessionStateError(f"cannot plan in status {self.status!r}")
        params = self.search_params
        overrides = overrides or {}
        if overrides:
            params = SearchParams(
                iterations=overrides.get("iterations", params.iterations),
                exploration_c=overrides.get("exploration_c", params.exploration_c),
                rollout_depth=overrides.get("rollout_depth", params.rollout_depth),
                seed=overrides.get("seed", self._epoch_seed(0x91A)),
            )
        else:
            params = SearchParams(
                iterations=params.iterations,
                exploration_c=params.exploration_c,
                rollout_depth=params.rollout_depth,
                seed=self._epoch_seed(0x91A),
            )
        try:
            action, tree = plan(self.current_state, params, self.config)
        except NoFeasibleActionError as exc:
            self.last_infeasibility = {
                vid: [
                    {"kind": v.kind, "request_id": v.request_id, "degree": v.degree}
                    for v in violations
                ]
                for vid, violations in exc.by_vehicle.items()
            }
            return {
                "feasible": False,
                "epoch": self.epoch,
                "violations_by_vehicle": self.last_infeasibility,
            }
        self.current_tree = tree
        self.recommendation = action
        self.status = "planned"
        root = tree.node(tree.root)
        per_vehicle = {}
        for vehicle_id, violations in infeasibility_report(self.current_state, self.config).items():
            per_vehicle[vehicle_id] = {
                "feasible": not violations,
                "violations": [
                    {"kind": v.kind, "request_id": v.request_id, "degree": v.degree}
                    for v in violations
                ],
            }
        for child_id in root.children:
            child = tree.nodes[child_id]
            per_vehicle[child.entering_action.vehicle_id].update(
                visits=child.visits,
                mean_value=child.mean_value,
                total_value=child.total_value,
                forced=child.forced,
            )
        return {
            "feasible": True,
            "epoch": self.epoch,
            "recommended_vehicle": action.vehicle_id,
            "request_id": action.request_id,
            "iterations_run": tree.iterations_run,
            "tree_nodes": len(tree.nodes),
            "per_vehicle": per_vehicle,
        }

    # -- queries ------------------------------------------------------------

    def submit_queries(self, raw_queries: list[dict]) -> list[Explanation]:
        if self.status != "planned":
            raise SessionStateError(f"queries require a current plan (status={self.status!r})")
        queries: list[Query] = []
        for raw in raw_queries:
            queries.append(instantiate_query(raw.get("qtype"), raw.get("bindings", {}), self))
        return handle_queries(self, queries, self.explain_params)

    # -- applying -----------------------------------------------------------

    def apply_recommendation(self, override_vehicle: int | None = None, force: bool = False) -> dict:
        """Apply the recommendation (or a dispatcher override) and advance one epoch."""
        if self.status != "planned":
            raise SessionStateError(f"apply requires a current plan (status={self.status!r})")
        state = self.current_state
        if override_vehicle is None:
            action = self.recommendation
        else:
            vehicle = state.vehicle(override_vehicle)
            action, _ = best_insertion(vehicle, state.outstanding, state.time, self.config)
        applied = apply_action(state, action, self.config, force=force)
        self.history.append(
            EpochOutcome(
                epoch=self.epoch,
                time=state.time,
                request_id=action.request_id,
                vehicle_id=action.vehicle_id,
                feasible=True,
                forced=force,
            )
        )
        self._advance(applied)
        return {
            "epoch": self.epoch,
            "status": self.status,
            "applied_vehicle": action.vehicle_id,
        }

    def skip_epoch(self) -> None:
        """Leave the outstanding request unassigned and move on (infeasible epoch)."""
        if self.status not in ("awaiting_plan", "planned"):
            raise SessionStateError(f"cannot skip in status {self.status!r}")
        state = self.current_state.clone()
        self.history.append(
            EpochOutcome(
                epoch=self.epoch,
                time=state.time,
                request_id=state.outstanding.id if state.outstanding else None,
                vehicle_id=None,
                feasible=False,
            )
        )
        state.outstanding = None
        self._advance(state)

    def _advance(self, resolved: State) -> None:
        cfg = self.config
        self.epoch += 1
        self.current_tree = None
        self.recommendation = None
        self.last_infeasibility = None
        if self._pending:
            nxt = self._pending.pop(0).copy()
            if nxt.t_r > cfg.horizon:
                state = advance_to(resolved, cfg.horizon, cfg)
                state.terminal = True
                self._pending.clear()
            else:
                state = advance_to(resolved, nxt.t_r, cfg)
                state.requests[nxt.id] = nxt
                state.outstanding = nxt
        else:
            state = transition(resolved, self._epoch_seed(0x7A), cfg)
        self.current_state = state
        self.status = "terminal" if state.terminal else "awaiting_plan"

    # -- exports ------------------------------------------------------------

    def tree_dump(self) -> dict:
        """Labeled dump of the current tree (context: outstanding request on the
        recommended vehicle, drop-off estimates)."""
        if self.current_tree is None or self.recommendation is None:
            raise SessionStateError("no search tree is available yet")
        root_state = self.current_tree.node(self.current_tree.root).state
        context = LabelContext(
            request_id=root_state.outstanding.id,
            vehicle_id=self.recommendation.vehicle_id,
        )
        labeled = export_labeled_tree(self.current_tree, context, self.config)
        return labeled.to_json()

    def state_payload(self) -> dict:
        state = self.current_state
        vehicles = []
        for v in state.vehicles:
            vehicles.append(
                {
                    "id": v.id,
                    "capacity": v.capacity,
                    "occupancy": v.occupancy,
                    "location": {"id": v.location.id, "x": v.location.display_x, "y": v.location.display_y},
                    "route": [
                        {
                            "location": {"id": s.location.id, "x": s.location.display_x, "y": s.location.display_y},
                            "request_id": s.request_id,
                            "kind": s.kind.value,
                            "t_est": s.t_est,
                        }
                        for s in v.route
                    ],
                    "assigned": list(v.assigned),
                }
            )
        outstanding = None
        if state.outstanding is not None:
            r = state.outstanding
            outstanding = {
                "id": r.id,
                "t_r": r.t_r,
                "t_p": r.t_p,
                "t_d": r.t_d,
                "l_p": {"id": r.l_p.id, "x": r.l_p.display_x, "y": r.l_p.display_y},
                "l_d": {"id": r.l_d.id, "x": r.l_d.display_x, "y": r.l_d.display_y},
                "status": r.status.value,
            }
        return {
            "epoch": self.epoch,
            "status": self.status,
            "time": state.time,
            "terminal": state.terminal,
            "vehicles": vehicles,
            "outstanding": outstanding,
            "recommended_vehicle": self.recommendation.vehicle_id if self.recommendation else None,
            "infeasibility": self.last_infeasibility,
        }
