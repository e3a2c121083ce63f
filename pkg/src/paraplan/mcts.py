"""Anytime UCT search over the dispatch MDP.

``plan`` builds a reusable search tree whose nodes can later be re-expanded
for what-if queries (``expand_alternative``) and exported as a labeled tree
for logic checking (``export_labeled_tree``). After a search returns, the
tree is treated as an immutable snapshot by the checker.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .ctl import LabeledNode, LabeledTree
from .errors import InvalidInputError, InvalidStateError, NoFeasibleActionError
from .model import (
    Action,
    ModelConfig,
    State,
    StopKind,
    apply_action,
    check_hard_constraints,
    feasible_actions,
    infeasibility_report,
    reward_breakdown,
    transition,
)


def mix_seed(base: int, *salts: int) -> int:
    """Deterministic seed derivation (splitmix-style); avoids shared RNG state."""
    h = base & 0xFFFFFFFFFFFFFFFF
    for salt in salts:
        h = (h ^ (salt + 0x9E3779B97F4A7C15)) & 0xFFFFFFFFFFFFFFFF
        h = (h * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        h ^= h >> 31
    return h


@dataclass(frozen=True)
class SearchParams:
    iterations: int = 150
    exploration_c: float = math.sqrt(2)
    rollout_depth: int = 10
    seed: int = 0


@dataclass
class SearchNode:
    id: int
    state: State
    entering_action: Action | None = None
    parent: int | None = None
    children: list[int] = field(default_factory=list)
    visits: int = 0
    total_value: float = 0.0
    service_component: float = 0.0
    punctuality_component: float = 0.0
    untried: list[Action] | None = None  # None = not yet computed
    forced: bool = False
    constraint_violations: list = field(default_factory=list)
    violation_flags: list[tuple[str, float]] = field(default_factory=list)

    @property
    def mean_value(self) -> float:
        return self.total_value / self.visits if self.visits else 0.0


@dataclass
class SearchTree:
    nodes: dict[int, SearchNode] = field(default_factory=dict)
    root: int = 0
    iterations_run: int = 0
    _next_id: int = 0
    _seed_counter: int = 0

    def node(self, node_id: int) -> SearchNode:
        if node_id not in self.nodes:
            raise InvalidInputError(f"unknown tree node {node_id}")
        return self.nodes[node_id]

    def add_node(self, state: State, entering_action: Action | None, parent: int | None) -> SearchNode:
        node = SearchNode(id=self._next_id, state=state, entering_action=entering_action, parent=parent)
        self.nodes[node.id] = node
        self._next_id += 1
        if parent is not None:
            self.nodes[parent].children.append(node.id)
        return node

    def root_child_for_vehicle(self, vehicle_id: int) -> SearchNode | None:
        for child_id in self.nodes[self.root].children:
            child = self.nodes[child_id]
            if child.entering_action and child.entering_action.vehicle_id == vehicle_id:
                return child
        return None


def select_child(tree: SearchTree, node_id: int, exploration_c: float) -> int:
    """UCB1 child choice; unvisited children go first, all ties break on lowest id."""
    node = tree.node(node_id)
    if not node.children:
        raise InvalidStateError(f"node {node_id} has no children to select from")
    unvisited = [c for c in node.children if tree.nodes[c].visits == 0]
    if unvisited:
        return min(unvisited)
    log_n = math.log(node.visits) if node.visits > 0 else 0.0
    best_id = None
    best_score = -math.inf
    for child_id in node.children:
        child = tree.nodes[child_id]
        score = child.mean_value + exploration_c * math.sqrt(log_n / child.visits)
        if score > best_score or (score == best_score and (best_id is None or child_id < best_id)):
            best_score = score
            best_id = child_id
    return best_id


def rollout(state: State, depth: int, seed: int, cfg: ModelConfig) -> float:
    """Discounted return of a uniform-random playout; deterministic per seed."""
    value, _, _ = _rollout_components(state, depth, seed, cfg)
    return value


def _rollout_components(
    state: State, depth: int, seed: int, cfg: ModelConfig
) -> tuple[float, float, float]:
    rng = random.Random(seed)
    service0, punct0 = reward_breakdown(state, cfg)
    service_total = service0
    punct_total = punct0
    current = state
    for k in range(1, depth + 1):
        if current.terminal:
            break
        if current.outstanding is not None:
            actions = feasible_actions(current, cfg)
            if actions:
                action = rng.choice(actions)
                current = apply_action(current, action, cfg)
            else:
                # skip the epoch: the request stays waiting, no reward event
                current = current.clone()
                current.outstanding = None
                current = transition(current, mix_seed(seed, k), cfg)
                continue
        current = transition(current, mix_seed(seed, k), cfg)
        service_k, punct_k = reward_breakdown(current, cfg)
        weight = cfg.discount**k
        service_total += weight * service_k
        punct_total += weight * punct_k
    return service_total + punct_total, service_total, punct_total


def backpropagate(
    tree: SearchTree,
    leaf: int,
    value: float,
    cfg: ModelConfig,
    components: tuple[float, float] | None = None,
    stop_at: int | None = None,
) -> None:
    """Credit ``value`` up the tree, discounted by distance from the leaf.

    ``stop_at`` bounds the walk (used by subtree re-expansion so statistics
    outside the queried subtree stay untouched).
    """
    service, punct = components if components is not None else (value, 0.0)
    node_id: int | None = leaf
    k = 0
    while node_id is not None:
        node = tree.node(node_id)
        weight = cfg.discount**k
        node.visits += 1
        node.total_value += weight * value
        node.service_component += weight * service
        node.punctuality_component += weight * punct
        if node_id == stop_at:
            break
        node_id = node.parent
        k += 1


def _expand_child(tree: SearchTree, parent: SearchNode, action: Action, cfg: ModelConfig, force: bool = False) -> SearchNode:
    violations = check_hard_constraints(parent.state, action, cfg)
    if violations and not force:
        raise InvalidStateError("expansion of an infeasible action requires force")
    assigned = apply_action(parent.state, action, cfg, force=bool(violations))
    seed = mix_seed(tree._seed_counter, parent.id, len(parent.children), 0xA5)
    tree._seed_counter += 1
    successor = transition(assigned, seed, cfg)
    child = tree.add_node(successor, action, parent.id)
    child.forced = bool(violations)
    child.constraint_violations = violations
    return child


def _search(tree: SearchTree, subroot_id: int, iterations: int, params: SearchParams, cfg: ModelConfig, seed: int) -> None:
    for i in range(iterations):
        node = tree.node(subroot_id)
        while True:
            if node.state.terminal:
                break
            if node.untried is None:
                node.untried = _node_actions(node.state, cfg)
            if node.untried:
                action = node.untried.pop(0)
                node = _expand_child(tree, node, action, cfg)
                break
            if not node.children:
                break
            node = tree.node(select_child(tree, node.id, params.exploration_c))
        rollout_seed = mix_seed(seed, i, node.id)
        value, service, punct = _rollout_components(
            node.state, params.rollout_depth, rollout_seed, cfg
        )
        backpropagate(tree, node.id, value, cfg, components=(service, punct), stop_at=subroot_id)
    tree.iterations_run += iterations


def _node_actions(state: State, cfg: ModelConfig) -> list[Action]:
    if state.terminal or state.outstanding is None:
        return []
    return feasible_actions(state, cfg)


def plan(state: State, params: SearchParams, cfg: ModelConfig) -> tuple[Action, SearchTree]:
    """Search from ``state`` and recommend an assignment for its outstanding request.

    The recommendation is the most-visited root child (ties: higher mean value,
    then lower vehicle id). Raises NoFeasibleActionError with the per-vehicle
    violation report when every insertion breaks a hard constraint.
    """
    if state.outstanding is None:
        raise InvalidStateError("plan requires an outstanding request")
    root_actions = feasible_actions(state, cfg)
    if not root_actions:
        raise NoFeasibleActionError(infeasibility_report(state, cfg))

    tree = SearchTree()
    tree._seed_counter = mix_seed(params.seed, 0xC0FFEE)
    root = tree.add_node(state.clone(), None, None)
    root.untried = list(root_actions)
    _search(tree, root.id, params.iterations, params, cfg, seed=params.seed)

    best = max(
        (tree.nodes[c] for c in root.children),
        key=lambda n: (n.visits, n.mean_value, -n.entering_action.vehicle_id),
    )
    return best.entering_action, tree


def expand_alternative(
    tree: SearchTree,
    queried: int,
    budget: int,
    seed: int,
    cfg: ModelConfig,
    params: SearchParams | None = None,
) -> tuple[SearchTree, int]:
    """Run ``budget`` extra search iterations rooted at the queried node.

    Statistics outside the queried subtree are untouched except
    ``iterations_run``; the queried node's visit count grows by exactly
    ``budget``. Returns the tree and the number of new scenarios explored.
    """
    node = tree.node(queried)
    if budget < 0:
        raise InvalidInputError("budget must be non-negative")
    if budget == 0:
        return tree, 0
    params = params or SearchParams(seed=seed)
    _search(tree, queried, budget, params, cfg, seed=seed)
    return tree, budget


def ensure_root_child(tree: SearchTree, state_action: Action, cfg: ModelConfig) -> SearchNode:
    """Root child for an alternative action, force-creating it if never expanded."""
    existing = tree.root_child_for_vehicle(state_action.vehicle_id)
    if existing is not None:
        return existing
    root = tree.node(tree.root)
    return _expand_child(tree, root, state_action, cfg, force=True)


# ---------------------------------------------------------------------------
# Labeled export

@dataclass(frozen=True)
class LabelContext:
    """What the labels should talk about: one request riding one vehicle.

    ``estimate_kind`` selects whether ``t_est`` tracks the pickup or the
    drop-off of the queried request.
    """

    request_id: int
    vehicle_id: int
    estimate_kind: StopKind = StopKind.DROPOFF


def _node_labels(state: State, context: LabelContext, cfg: ModelConfig) -> tuple[dict, frozenset]:
    labels: dict[str, object] = {
        "t_a": cfg.t_a,
        "v_rt": cfg.reasonable_route_minutes,
        "theta_d": cfg.reasonable_stops,
    }
    na: set[str] = set()

    vehicle = None
    for v in state.vehicles:
        if v.id == context.vehicle_id:
            vehicle = v
            break
    if vehicle is None:
        raise InvalidInputError(f"unknown vehicle id {context.vehicle_id}")

    request = state.requests.get(context.request_id)
    if request is None:
        na.update(("t_p", "t_d", "t_est", "r_cs", "theta_s"))
    else:
        labels["t_p"] = request.t_p
        labels["t_d"] = request.t_d
        labels["r_cs"] = request.status.value

        on_queried_vehicle = request.assigned_vehicle == vehicle.id
        est = None
        if on_queried_vehicle:
            if context.estimate_kind == StopKind.PICKUP and request.actual_pickup is not None:
                est = request.actual_pickup
            elif context.estimate_kind == StopKind.DROPOFF and request.actual_dropoff is not None:
                est = request.actual_dropoff
            else:
                for stop in vehicle.route:
                    if stop.request_id == request.id and stop.kind == context.estimate_kind:
                        est = stop.t_est
                        break
        if est is None:
            na.add("t_est")
        else:
            labels["t_est"] = est

        theta_s = None
        if on_queried_vehicle:
            for idx, stop in enumerate(vehicle.route):
                if stop.request_id == request.id and stop.kind == StopKind.DROPOFF:
                    theta_s = idx
                    break
        if theta_s is None:
            na.add("theta_s")
        else:
            labels["theta_s"] = theta_s

    labels["v_c"] = vehicle.capacity
    # peak occupancy over the remaining planned route, so a capacity breach
    # anywhere on the plan is visible at this node
    occ = vehicle.occupancy
    peak = occ
    for stop in vehicle.route:
        occ += 1 if stop.kind == StopKind.PICKUP else -1
        peak = max(peak, occ)
    labels["v_o"] = peak

    remaining = vehicle.route[-1].t_est - state.time if vehicle.route else 0
    labels["v_tt"] = max(0, remaining)

    if vehicle.fuel is None:
        na.update(("v_ft", "v_fr"))
    else:
        labels["v_ft"] = vehicle.fuel
        labels["v_fr"] = max(0, remaining)

    return labels, frozenset(na)


def export_labeled_tree(
    tree: SearchTree,
    context: LabelContext,
    cfg: ModelConfig,
    subtree_root: int | None = None,
) -> LabeledTree:
    """Labeled snapshot of the tree (or a subtree) for the checker.

    Node ids are renumbered in depth-first creation order, so exports of the
    same tree are stable.
    """
    if not tree.nodes:
        raise InvalidStateError("cannot export an empty tree")
    start = tree.root if subtree_root is None else subtree_root
    if context.request_id not in tree.node(start).state.requests:
        raise InvalidInputError(f"unknown request id {context.request_id}")

    order: list[int] = []
    stack = [start]
    while stack:
        node_id = stack.pop()
        order.append(node_id)
        for child in reversed(tree.nodes[node_id].children):
            stack.append(child)
    renumber = {old: new for new, old in enumerate(order)}

    nodes: dict[int, LabeledNode] = {}
    for old_id in order:
        node = tree.nodes[old_id]
        labels, na = _node_labels(node.state, context, cfg)
        action = node.entering_action
        nodes[renumber[old_id]] = LabeledNode(
            id=renumber[old_id],
            parent=renumber[node.parent] if (node.parent is not None and old_id != start) else None,
            children=[renumber[c] for c in node.children],
            labels=labels,
            not_applicable=na,
            visits=node.visits,
            total_value=node.total_value,
            entering_action=(
                {"request_id": action.request_id, "vehicle_id": action.vehicle_id}
                if action
                else None
            ),
        )
    return LabeledTree(
        nodes=nodes,
        root=renumber[start],
        iterations_run=tree.iterations_run,
        source_ids={new: old for old, new in renumber.items()},
    )
