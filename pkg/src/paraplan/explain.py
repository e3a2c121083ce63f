"""Dispatcher queries: templates, logic bundles, evaluation, and rendering.

The three query families are *factual* ("will my passenger be served on
time?"), *contrastive* ("why not this other vehicle?") and *tree expansion*
("take a deeper look at this alternative"). Each query compiles to a bundle
of logic formulas; hard-constraint formulas are evaluated before efficiency
ones, and efficiency results are withheld ("skipped") whenever a hard
constraint is already violated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from . import ctl
from .ctl import QuantitativeSummary, ViolationRecord
from .errors import InvalidStateError, QueryValidationError, TemplateError
from .mcts import (
    LabelContext,
    SearchTree,
    ensure_root_child,
    expand_alternative,
    export_labeled_tree,
    mix_seed,
)
from .model import Action, ModelConfig, StopKind, best_insertion, round_half_up


class QueryType(str, Enum):
    FACTUAL = "factual"
    CONTRASTIVE = "contrastive"
    TREE_EXPANSION = "tree_expansion"


_BINDING_KEYS = {
    QueryType.FACTUAL: {"passenger", "action", "direction"},
    QueryType.CONTRASTIVE: {"passenger", "alt_vehicle"},
    QueryType.TREE_EXPANSION: {"passenger", "alt_vehicle"},
}
_OPTIONAL_KEYS = {
    QueryType.FACTUAL: set(),
    QueryType.CONTRASTIVE: {"location"},
    QueryType.TREE_EXPANSION: {"budget"},
}


@dataclass(frozen=True)
class Query:
    qtype: QueryType
    bindings: dict
    raw_text: str = ""


@dataclass(frozen=True)
class FormulaSpec:
    """One bundle entry: a formula with its criterion class and label context."""

    formula_id: str
    text: str
    spec_type: str  # "efficiency" | "hard_constraint" | "soundness"
    estimate_kind: StopKind | None = None
    direction: str | None = None  # "late" | "early" for efficiency entries

    @property
    def formula(self) -> ctl.Formula:
        return ctl.parse_formula(self.text)


@dataclass
class FormulaOutcome:
    spec: FormulaSpec
    verdict: bool | str  # True / False / "skipped"
    summary: QuantitativeSummary | None = None
    records: list[ViolationRecord] = field(default_factory=list)


@dataclass(frozen=True)
class ScoreComparison:
    recommended_score: float
    alternative_score: float
    service_improvement_pct: float
    punctuality_improvement_pct: float


@dataclass
class Explanation:
    query: Query
    verdicts: dict[str, bool | str] = field(default_factory=dict)
    summaries: dict[str, QuantitativeSummary | None] = field(default_factory=dict)
    comparison: ScoreComparison | None = None
    new_iterations: int | None = None
    template: str = ""
    slots: dict = field(default_factory=dict)
    text: str = ""
    error: str | None = None

    def to_json(self) -> dict:
        summaries = {}
        for fid, summary in self.summaries.items():
            if summary is None:
                summaries[fid] = None
                continue
            summaries[fid] = {
                "applicable": summary.applicable_nodes,
                "violating": summary.violating_nodes,
                "pct": summary.violation_pct,
                "avg": summary.avg_degree,
                "min": summary.min_degree,
                "max": summary.max_degree,
                "scenarios": summary.scenario_count,
            }
        doc = {
            "qtype": self.query.qtype.value,
            "raw_text": self.query.raw_text,
            "verdicts": dict(self.verdicts),
            "summaries": summaries,
            "text": self.text,
            "template": self.template,
            "slots": dict(self.slots),
        }
        if self.comparison is not None:
            doc["comparison"] = {
                "recommended_score": self.comparison.recommended_score,
                "alternative_score": self.comparison.alternative_score,
                "service_improvement_pct": self.comparison.service_improvement_pct,
                "punctuality_improvement_pct": self.comparison.punctuality_improvement_pct,
            }
        if self.new_iterations is not None:
            doc["new_iterations"] = self.new_iterations
        if self.error is not None:
            doc["error"] = self.error
        return doc


@dataclass(frozen=True)
class ExplainParams:
    t3_budget: int = 74
    contrastive_budget: int = 25
    seed: int = 0


# ---------------------------------------------------------------------------
# Query instantiation

def instantiate_query(qtype: QueryType | str, bindings: dict, session) -> Query:
    """Validate bindings against the query template and resolve referenced ids."""
    qtype = QueryType(qtype)
    problems = []
    required = _BINDING_KEYS[qtype]
    allowed = required | _OPTIONAL_KEYS[qtype]
    for key in sorted(required - set(bindings)):
        problems.append(f"missing binding {key!r}")
    for key in sorted(set(bindings) - allowed):
        problems.append(f"unexpected binding {key!r}")
    if problems:
        raise QueryValidationError(problems)

    state = session.current_state
    passenger = bindings["passenger"]
    if not isinstance(passenger, int) or passenger not in state.requests:
        problems.append(f"unknown passenger {passenger!r}")

    if qtype == QueryType.FACTUAL:
        if bindings["action"] not in ("pickup", "dropoff"):
            problems.append(f"action must be 'pickup' or 'dropoff', got {bindings['action']!r}")
        if bindings["direction"] not in ("late", "early"):
            problems.append(f"direction must be 'late' or 'early', got {bindings['direction']!r}")
    else:
        alt = bindings["alt_vehicle"]
        if not isinstance(alt, int) or not any(v.id == alt for v in state.vehicles):
            problems.append(f"unknown vehicle {alt!r}")
        if qtype == QueryType.TREE_EXPANSION and "budget" in bindings:
            if not isinstance(bindings["budget"], int) or bindings["budget"] < 0:
                problems.append("budget must be a non-negative integer")
    if problems:
        raise QueryValidationError(problems)

    if qtype == QueryType.FACTUAL:
        phrase = "picked up" if bindings["action"] == "pickup" else "dropped off"
        raw = (
            f"Based on the current vehicle assignment, is it expected that "
            f"passenger {passenger} will be {phrase} {bindings['direction']}?"
        )
    elif qtype == QueryType.CONTRASTIVE:
        where = f" located at {bindings['location']}" if bindings.get("location") else ""
        raw = f"Why wasn't passenger {passenger} assigned to vehicle {bindings['alt_vehicle']}{where}?"
    else:
        raw = (
            f"Can you tell me more about assigning passenger {passenger} "
            f"to vehicle {bindings['alt_vehicle']}?"
        )
    return Query(qtype=qtype, bindings=dict(bindings), raw_text=raw)


# ---------------------------------------------------------------------------
# Query -> formula bundle

_EFFICIENCY = {
    ("pickup", "late"): ("phi1", "AG (t_est <= t_p + t_a)"),
    ("dropoff", "late"): ("phi2", "AG (t_est <= t_d + t_a)"),
    ("pickup", "early"): ("phi8", "AG (t_est >= t_p - t_a)"),
    ("dropoff", "early"): ("phi9", "AG (t_est >= t_d - t_a)"),
}

CAPACITY_SPEC = FormulaSpec("phi3", "AG (v_o <= v_c)", "hard_constraint")
FUEL_SPEC = FormulaSpec("phi4", "AG (v_fr <= v_ft)", "hard_constraint")
SOUNDNESS_SPECS = (
    FormulaSpec("phi5", "AG (v_tt <= v_rt)", "soundness"),
    FormulaSpec("phi6", "AG (theta_s <= theta_d)", "soundness"),
    FormulaSpec("phi7", "AF (r_cs = dropped-off)", "soundness"),
)

_SOUNDNESS_PHRASES = {
    "phi5": "the total remaining travel time stays within a reasonable timeframe",
    "phi6": "the route keeps a reasonable number of intermediate stops",
    "phi7": "the passenger is eventually dropped off",
}
_HARD_PHRASES = {"phi3": "passenger capacity", "phi4": "fuel endurance"}


def _efficiency_spec(action: str, direction: str) -> FormulaSpec:
    fid, text = _EFFICIENCY[(action, direction)]
    kind = StopKind.PICKUP if action == "pickup" else StopKind.DROPOFF
    return FormulaSpec(fid, text, "efficiency", estimate_kind=kind, direction=direction)


def query_to_formulas(query: Query, cfg: ModelConfig, models_fuel: bool = False) -> list[FormulaSpec]:
    """The logic bundle a query compiles to; a pure function of the query and config."""
    if query.qtype == QueryType.FACTUAL:
        return [_efficiency_spec(query.bindings["action"], query.bindings["direction"])]
    bundle = [CAPACITY_SPEC]
    if models_fuel:
        bundle.append(FUEL_SPEC)
    bundle.append(_efficiency_spec("pickup", "late"))
    bundle.append(_efficiency_spec("dropoff", "late"))
    if query.qtype == QueryType.TREE_EXPANSION:
        bundle.append(_efficiency_spec("dropoff", "early"))
        bundle.extend(SOUNDNESS_SPECS)
    return bundle


# ---------------------------------------------------------------------------
# Evaluation

def exp_gen(
    tree: SearchTree,
    spec: FormulaSpec,
    request_id: int,
    vehicle_id: int,
    cfg: ModelConfig,
    subtree_root: int | None = None,
) -> FormulaOutcome:
    """Check one bundle entry against the (sub)tree and aggregate its violations."""
    context = LabelContext(
        request_id=request_id,
        vehicle_id=vehicle_id,
        estimate_kind=spec.estimate_kind or StopKind.DROPOFF,
    )
    labeled = export_labeled_tree(tree, context, cfg, subtree_root=subtree_root)
    formula = spec.formula
    result = ctl.check(labeled, formula)
    summary, records = ctl.quantify_violations(labeled, formula)
    if labeled.source_ids:
        for record in records:
            source = tree.nodes.get(labeled.source_ids[record.node_id])
            if source is not None:
                source.violation_flags.append((spec.formula_id, record.degree))
    return FormulaOutcome(spec=spec, verdict=result.root_verdict, summary=summary, records=records)


def evaluate_bundle(
    tree: SearchTree,
    bundle: list[FormulaSpec],
    request_id: int,
    vehicle_id: int,
    cfg: ModelConfig,
    subtree_root: int | None = None,
) -> list[FormulaOutcome]:
    """Hard constraints first; efficiency entries are skipped once one fails."""
    ordering = {"hard_constraint": 0, "efficiency": 1, "soundness": 2}
    outcomes: dict[str, FormulaOutcome] = {}
    hard_violated = False
    for spec in sorted(bundle, key=lambda s: ordering[s.spec_type]):
        if spec.spec_type == "efficiency" and hard_violated:
            outcomes[spec.formula_id] = FormulaOutcome(spec=spec, verdict="skipped")
            continue
        outcome = exp_gen(tree, spec, request_id, vehicle_id, cfg, subtree_root=subtree_root)
        if spec.spec_type == "hard_constraint" and outcome.verdict is False:
            hard_violated = True
        outcomes[spec.formula_id] = outcome
    return [outcomes[spec.formula_id] for spec in bundle]


def _improvement_pct(rec_mean: float, alt_mean: float) -> float:
    # relative to the alternative's magnitude; degenerate baselines use one unit
    denom = abs(alt_mean)
    if denom < 1e-12:
        denom = 1.0
    return 100.0 * (rec_mean - alt_mean) / denom


def compare_actions(tree: SearchTree, recommended: Action, alternative: Action) -> ScoreComparison:
    """Composite scores (total accumulated value) of two root children, plus the
    per-component improvements of the recommended child over the alternative."""
    rec = tree.root_child_for_vehicle(recommended.vehicle_id)
    alt = tree.root_child_for_vehicle(alternative.vehicle_id)
    if rec is None or alt is None:
        raise InvalidStateError("both actions must correspond to root children")
    if rec.visits == 0 or alt.visits == 0:
        raise InvalidStateError(
            "comparison deferred: expand the alternative so it has visit statistics"
        )
    return ScoreComparison(
        recommended_score=rec.total_value,
        alternative_score=alt.total_value,
        service_improvement_pct=_improvement_pct(
            rec.service_component / rec.visits, alt.service_component / alt.visits
        ),
        punctuality_improvement_pct=_improvement_pct(
            rec.punctuality_component / rec.visits, alt.punctuality_component / alt.visits
        ),
    )


# ---------------------------------------------------------------------------
# Rendering

_SLOT_RE = re.compile(r"\[([a-z_]+)\]")


def load_template(name: str) -> str:
    path = resources.files("paraplan").joinpath("templates", f"{name}.txt")
    try:
        return path.read_text(encoding="utf-8").rstrip("\n")
    except FileNotFoundError:
        raise TemplateError(f"unknown template {name!r}")


def format_clock(minutes: int, cfg: ModelConfig) -> str:
    """Scenario minute offset -> 12-hour wall clock (scenarios start at noon)."""
    total = (cfg.day_start_minutes + int(minutes)) % (24 * 60)
    hour24, minute = divmod(total, 60)
    suffix = "AM" if hour24 < 12 else "PM"
    hour = hour24 % 12 or 12
    return f"{hour}:{minute:02d} {suffix}"


def _format_slot(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return str(round_half_up(value))
    return str(value)


def render_from_slots(template_name: str, slots: dict) -> str:
    """Fill ``[slot]`` placeholders; unknown slots raise TemplateError by name."""
    template = load_template(template_name)

    def fill(match: re.Match) -> str:
        key = match.group(1)
        if key not in slots:
            raise TemplateError(f"template {template_name!r} is missing slot {key!r}")
        return _format_slot(slots[key])

    return _SLOT_RE.sub(fill, template)


def _event_noun(action: str) -> str:
    return "pick-up" if action == "pickup" else "drop-off"


def _select_tree_expansion_template(outcomes: list[FormulaOutcome]) -> tuple[str, FormulaOutcome | None]:
    hard = [o for o in outcomes if o.spec.spec_type == "hard_constraint" and o.verdict is False]
    if hard:
        return "tree_expansion_hard", max(hard, key=lambda o: o.summary.violation_pct)
    efficiency = [o for o in outcomes if o.spec.spec_type == "efficiency" and o.verdict is False]
    if efficiency:
        worst = max(efficiency, key=lambda o: o.summary.violation_pct)
        name = "tree_expansion_early" if worst.spec.direction == "early" else "tree_expansion_late"
        return name, worst
    soundness = [o for o in outcomes if o.spec.spec_type == "soundness" and o.verdict is False]
    if soundness:
        return "tree_expansion_soundness", max(soundness, key=lambda o: o.summary.violation_pct)
    return "tree_expansion_ok", None


def render_explanation(
    query: Query,
    outcomes: list[FormulaOutcome],
    comparison: ScoreComparison | None,
    cfg: ModelConfig,
    desired_time: int | None = None,
    stop_count: int | None = None,
    new_iterations: int | None = None,
) -> tuple[str, str, dict]:
    """Pick a template for the verdict pattern and fill it.

    Returns (template name, rendered text, slot values). Every number in the
    text equals the corresponding slot after half-up rounding.
    """
    if query.qtype == QueryType.FACTUAL:
        outcome = outcomes[0]
        slots = {
            "event_noun": _event_noun(query.bindings["action"]),
            "desired_time": format_clock(desired_time or 0, cfg),
            "scenario_count": outcome.summary.scenario_count if outcome.summary else 0,
        }
        if outcome.verdict is False and outcome.summary and outcome.summary.violating_nodes:
            slots.update(
                avg_degree=outcome.summary.avg_degree,
                min_degree=outcome.summary.min_degree,
                max_degree=outcome.summary.max_degree,
                violation_pct=outcome.summary.violation_pct,
                stop_count=stop_count or 0,
            )
            name = (
                "factual_early_violated"
                if query.bindings["direction"] == "early"
                else "factual_late_violated"
            )
        else:
            name = "factual_ok"
        return name, render_from_slots(name, slots), slots

    if query.qtype == QueryType.CONTRASTIVE:
        hard = [o for o in outcomes if o.spec.spec_type == "hard_constraint" and o.verdict is False]
        if hard:
            worst = max(hard, key=lambda o: o.summary.violation_pct)
            slots = {
                "violating_nodes": worst.summary.violating_nodes,
                "applicable_nodes": worst.summary.applicable_nodes,
                "violation_pct": worst.summary.violation_pct,
                "max_degree": worst.summary.max_degree,
                "violated_constraint": _HARD_PHRASES[worst.spec.formula_id],
            }
            return "contrastive_hard_violated", render_from_slots("contrastive_hard_violated", slots), slots
        if comparison is None:
            raise TemplateError("contrastive rendering requires a score comparison")
        slots = {
            "recommended_score": comparison.recommended_score,
            "alternative_score": comparison.alternative_score,
            "service_improvement_pct": comparison.service_improvement_pct,
            "punctuality_improvement_pct": comparison.punctuality_improvement_pct,
        }
        return "contrastive_scores", render_from_slots("contrastive_scores", slots), slots

    name, worst = _select_tree_expansion_template(outcomes)
    slots: dict = {"new_iterations": new_iterations or 0}
    if name in ("tree_expansion_early", "tree_expansion_late"):
        slots.update(
            avg_degree=worst.summary.avg_degree,
            violation_pct=worst.summary.violation_pct,
            event_noun="pick-up" if worst.spec.estimate_kind == StopKind.PICKUP else "drop-off",
        )
    elif name == "tree_expansion_hard":
        slots.update(
            violation_pct=worst.summary.violation_pct,
            max_degree=worst.summary.max_degree,
            violated_constraint=_HARD_PHRASES[worst.spec.formula_id],
        )
    elif name == "tree_expansion_soundness":
        slots.update(
            violation_pct=worst.summary.violation_pct,
            violated_check=_SOUNDNESS_PHRASES[worst.spec.formula_id],
        )
    return name, render_from_slots(name, slots), slots


# ---------------------------------------------------------------------------
# Orchestration

def _recommended_child_stop_count(session, request_id: int) -> int:
    tree = session.current_tree
    child = tree.root_child_for_vehicle(session.recommendation.vehicle_id)
    if child is None:
        return 0
    vehicle = child.state.vehicle(session.recommendation.vehicle_id)
    for idx, stop in enumerate(vehicle.route):
        if stop.request_id == request_id and stop.kind == StopKind.DROPOFF:
            return idx
    return 0


def handle_queries(session, queries: list[Query], params: ExplainParams) -> list[Explanation]:
    """Answer queries against the session's current plan, in submission order.

    Per-query failures are captured in that query's Explanation; tree expansion
    queries enlarge the stored search tree as a side effect.
    """
    explanations = []
    for index, query in enumerate(queries):
        explanation = Explanation(query=query)
        try:
            _handle_one(session, query, params, index, explanation)
        except Exception as exc:  # per-query isolation, the session survives
            explanation.error = f"{type(exc).__name__}: {exc}"
        explanations.append(explanation)
    return explanations


def _handle_one(session, query: Query, params: ExplainParams, index: int, out: Explanation) -> None:
    if session.status != "planned":
        raise InvalidStateError(
            f"queries are only accepted while a plan is current (status={session.status!r})"
        )
    tree: SearchTree = session.current_tree
    cfg: ModelConfig = session.config
    request_id = query.bindings["passenger"]
    bundle = query_to_formulas(query, cfg, models_fuel=session.models_fuel)

    if query.qtype == QueryType.FACTUAL:
        vehicle_id = session.recommendation.vehicle_id
        outcomes = evaluate_bundle(tree, bundle, request_id, vehicle_id, cfg)
        request = session.current_state.requests[request_id]
        desired = request.t_p if query.bindings["action"] == "pickup" else request.t_d
        out.template, out.text, out.slots = render_explanation(
            query,
            outcomes,
            None,
            cfg,
            desired_time=desired,
            stop_count=_recommended_child_stop_count(session, request_id),
        )
    else:
        alt_vehicle = query.bindings["alt_vehicle"]
        root_state = tree.node(tree.root).state
        alt_action, _ = best_insertion(
            root_state.vehicle(alt_vehicle), root_state.outstanding, root_state.time, cfg
        )
        alt_child = ensure_root_child(tree, alt_action, cfg)
        seed = mix_seed(params.seed, session.epoch, index)
        if query.qtype == QueryType.TREE_EXPANSION:
            budget = query.bindings.get("budget", params.t3_budget)
            _, new_iterations = expand_alternative(
                tree, alt_child.id, budget, seed, cfg, params=session.search_params
            )
            out.new_iterations = new_iterations
        elif alt_child.visits == 0:
            expand_alternative(
                tree, alt_child.id, params.contrastive_budget, seed, cfg,
                params=session.search_params,
            )
        outcomes = evaluate_bundle(
            tree, bundle, request_id, alt_vehicle, cfg, subtree_root=alt_child.id
        )
        try:
            out.comparison = compare_actions(tree, session.recommendation, alt_action)
        except InvalidStateError:
            out.comparison = None  # zero-visit alternative (e.g. zero-budget expansion)
        out.template, out.text, out.slots = render_explanation(
            query, outcomes, out.comparison, cfg, new_iterations=out.new_iterations
        )

    out.verdicts = {o.spec.formula_id: o.verdict for o in outcomes}
    out.summaries = {o.spec.formula_id: o.summary for o in outcomes}
