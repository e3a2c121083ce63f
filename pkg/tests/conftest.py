from __future__ import annotations

import random
from fractions import Fraction

import pytest

from paraplan import ctl
from paraplan.ctl import LabeledNode, LabeledTree
from paraplan.model import Location, ModelConfig, Request, State, Vehicle

GRID = [
    Location(1, 2, 2),
    Location(2, 18, 3),
    Location(3, 9, 16),
    Location(4, 5, 9),
    Location(5, 14, 11),
    Location(6, 11, 5),
    Location(7, 3, 14),
    Location(8, 16, 15),
]


@pytest.fixture
def cfg() -> ModelConfig:
    return ModelConfig.with_locations(GRID, horizon=480, arrival_rate=6.0)


def make_state(cfg: ModelConfig, vehicles=None, request=None, time=0) -> State:
    if vehicles is None:
        vehicles = [
            Vehicle(1, 8, location=cfg.locations[0]),
            Vehicle(2, 8, location=cfg.locations[1]),
            Vehicle(3, 8, location=cfg.locations[2]),
        ]
    if request is None:
        request = Request(1, t_r=time, t_p=time + 15, t_d=time + 33,
                          l_p=cfg.locations[3], l_d=cfg.locations[4])
    return State(time=time, vehicles=vehicles, outstanding=request,
                 requests={request.id: request})


def scenario_doc(**overrides) -> dict:
    doc = {
        "locations": [
            {"id": l.id, "display_x": l.display_x, "display_y": l.display_y} for l in GRID
        ],
        "vehicles": [
            {"id": 1, "capacity": 8, "location": 1},
            {"id": 2, "capacity": 8, "location": 2},
            {"id": 3, "capacity": 8, "location": 3},
        ],
        "requests": [
            {"id": 1, "t_r": 300, "t_p": 315, "t_d": 333, "l_p": 4, "l_d": 5},
            {"id": 2, "t_r": 312, "t_p": 325, "t_d": 350, "l_p": 6, "l_d": 7},
            {"id": 3, "t_r": 326, "t_p": 340, "t_d": 368, "l_p": 8, "l_d": 1},
        ],
        "config": {
            "T_max": 45, "t_a": 10, "gamma1": 1.0, "gamma2": 0.1, "gamma3": 0.1,
            "discount": 0.95, "arrival_rate": 6, "horizon": 480, "minutes_per_unit": 1,
        },
        "seed": 20240471,
    }
    doc.update(overrides)
    return doc


# ---------------------------------------------------------------------------
# Random labeled trees and formulas for the randomized logic suites

NUMERIC_VARS = ("t_est", "t_p", "t_d", "t_a", "v_c", "v_o", "v_tt", "v_rt",
                "v_ft", "v_fr", "theta_s", "theta_d")
STATUSES = ("waiting", "assigned", "in-transit", "dropped-off")


def random_labeled_tree(rng: random.Random, max_nodes: int = 100) -> LabeledTree:
    count = rng.randint(1, max_nodes)
    nodes: dict[int, LabeledNode] = {}
    for node_id in range(count):
        parent = None if node_id == 0 else rng.randrange(node_id)
        labels: dict[str, object] = {}
        na = set()
        for var in NUMERIC_VARS:
            if rng.random() < 0.15:
                na.add(var)
            else:
                labels[var] = rng.randint(0, 60)
        if rng.random() < 0.15:
            na.add("r_cs")
        else:
            labels["r_cs"] = rng.choice(STATUSES)
        nodes[node_id] = LabeledNode(
            id=node_id, parent=parent, labels=labels, not_applicable=frozenset(na)
        )
        if parent is not None:
            nodes[parent].children.append(node_id)
    return LabeledTree(nodes=nodes, root=0, iterations_run=count)


def random_atom(rng: random.Random) -> ctl.AtomF:
    if rng.random() < 0.15:
        op = rng.choice(("=", "!="))
        return ctl.AtomF(
            ctl.Atom(
                ctl.Expr(((Fraction(1), "r_cs"),)),
                op,
                ctl.Expr(status=rng.choice(STATUSES)),
            )
        )
    op = rng.choice(("<=", "<", ">=", ">", "=", "!="))

    def side():
        terms = []
        for _ in range(rng.randint(0, 2)):
            coeff = Fraction(rng.choice((1, 1, 1, 2, -1)))
            terms.append((coeff, rng.choice(NUMERIC_VARS)))
        const = Fraction(rng.randint(-10, 60)) if (terms == [] or rng.random() < 0.6) else Fraction(0)
        return ctl.Expr(tuple(terms), const)

    return ctl.AtomF(ctl.Atom(side(), op, side()))


def random_formula(rng: random.Random, depth: int = 4) -> ctl.Formula:
    if depth <= 0 or rng.random() < 0.25:
        roll = rng.random()
        if roll < 0.05:
            return ctl.TrueF()
        if roll < 0.10:
            return ctl.FalseF()
        return random_atom(rng)
    kind = rng.choice(("not", "and", "or", "temporal", "temporal", "temporal"))
    if kind == "not":
        return ctl.Not(random_formula(rng, depth - 1))
    if kind == "and":
        return ctl.And(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    if kind == "or":
        return ctl.Or(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    return ctl.Temporal(rng.choice(ctl.TEMPORAL_OPS), random_formula(rng, depth - 1))


def golden_quantification_tree() -> LabeledTree:
    """31 nodes: one root where the estimate is undefined, 30 applicable children
    of which exactly three run late, by 19, 23 and 27 minutes."""
    nodes = {0: LabeledNode(id=0, parent=None, labels={"t_d": 20, "t_a": 10},
                            not_applicable=frozenset({"t_est"}))}
    degrees = {10: 19, 17: 23, 24: 27}  # node id -> minutes over the bound
    for node_id in range(1, 31):
        excess = degrees.get(node_id, -5)
        nodes[node_id] = LabeledNode(
            id=node_id,
            parent=0,
            labels={"t_est": 30 + excess, "t_d": 20, "t_a": 10},
        )
        nodes[0].children.append(node_id)
    return LabeledTree(nodes=nodes, root=0, iterations_run=150)
