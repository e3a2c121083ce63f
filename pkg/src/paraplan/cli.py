"""Headless driver: simulation runs, formula checks, one-shot explanations, serving.

Machine-readable output is line-oriented ``key=value`` so golden diffs stay
stable. Exit codes: 0 success, 1 user error, 2 internal error.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click

from . import ctl
from .errors import ParaplanError, ValidationError
from .explain import ExplainParams
from .mcts import SearchParams
from .model import RequestStatus, round_half_up
from .scenario import load_scenario
from .session import Session

log = logging.getLogger("paraplan")


def _fail(message: str, code: int = 1):
    click.echo(f"error={message}", err=True)
    sys.exit(code)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    """Explainable dispatch planning toolkit."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _metrics_rows(session: Session) -> tuple[list[dict], dict]:
    rows = []
    state = session.current_state
    for outcome in session.history:
        rows.append(
            {
                "epoch": outcome.epoch,
                "time": outcome.time,
                "request_id": outcome.request_id if outcome.request_id is not None else "",
                "vehicle_id": outcome.vehicle_id if outcome.vehicle_id is not None else "",
                "feasible": int(outcome.feasible),
            }
        )
    assigned = [r for r in state.requests.values() if r.status != RequestStatus.WAITING]
    served = [r for r in assigned if r.status == RequestStatus.DROPPED_OFF]
    picked = [r for r in assigned if r.actual_pickup is not None]
    service_rate = len(served) / len(assigned) if assigned else 0.0
    pickup_devs = [r.t_p - r.actual_pickup for r in picked]
    dropoff_devs = [r.t_d - r.actual_dropoff for r in served]
    summary = {
        "service_rate": service_rate,
        "mean_pickup_dev": sum(pickup_devs) / len(pickup_devs) if pickup_devs else 0.0,
        "mean_dropoff_dev": sum(dropoff_devs) / len(dropoff_devs) if dropoff_devs else 0.0,
    }
    return rows, summary


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--epochs", default=5, show_default=True, help="Decision epochs to run.")
@click.option("--seed", default=None, type=int, help="Override the scenario seed.")
@click.option("--iterations", default=150, show_default=True, help="Search iterations per epoch.")
@click.option("--rollout-depth", default=10, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True,
              help="Directory for tree dumps, metrics and figures.")
@click.option("--plot/--no-plot", default=False, show_default=True,
              help="Render map and metrics figures alongside the CSV.")
def simulate(scenario_path, epochs, seed, iterations, rollout_depth, out_dir, plot):
    """Run EPOCHS decision epochs, auto-accepting every recommendation."""
    try:
        scenario = load_scenario(scenario_path)
    except ValidationError as exc:
        _fail(f"scenario:{exc.field}:{exc.detail}")
    base_seed = scenario.seed if seed is None else seed
    session = Session(
        scenario,
        search_params=SearchParams(iterations=iterations, rollout_depth=rollout_depth, seed=base_seed),
        explain_params=ExplainParams(seed=base_seed),
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for k in range(epochs):
        if session.status == "terminal":
            click.echo(f"epoch_{k}_status=terminal")
            break
        payload = session.plan_epoch()
        if not payload["feasible"]:
            log.warning("epoch %d infeasible; request skipped", k)
            click.echo(f"epoch_{k}_status=infeasible")
            session.skip_epoch()
            continue
        dump = session.tree_dump()
        dump_path = out / f"epoch_{k:03d}.tree.json"
        dump_path.write_text(json.dumps(dump, sort_keys=True, indent=1), encoding="utf-8")
        click.echo(f"epoch_{k}_status=assigned")
        click.echo(f"epoch_{k}_vehicle={payload['recommended_vehicle']}")
        click.echo(f"epoch_{k}_iterations={payload['iterations_run']}")
        if plot:
            from . import report

            state = session.current_tree.node(session.current_tree.root).state
            report.render_map(state, payload["recommended_vehicle"], out / f"epoch_{k:03d}.map.png")
        session.apply_recommendation()

    rows, summary = _metrics_rows(session)
    metrics_path = out / "metrics.csv"
    with metrics_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "time", "request_id", "vehicle_id", "feasible"])
        for row in rows:
            writer.writerow([row["epoch"], row["time"], row["request_id"], row["vehicle_id"], row["feasible"]])
        writer.writerow([])
        writer.writerow(["service_rate", summary["service_rate"]])
        writer.writerow(["mean_pickup_dev", summary["mean_pickup_dev"]])
        writer.writerow(["mean_dropoff_dev", summary["mean_dropoff_dev"]])
    for key, value in summary.items():
        click.echo(f"{key}={value}")
    click.echo(f"epochs_run={len(session.history)}")
    click.echo(f"metrics={metrics_path}")
    if plot:
        from . import report

        chart_rows = []
        for outcome in session.history:
            chart_rows.append(
                {
                    "epoch": outcome.epoch,
                    "service_rate": summary["service_rate"],
                    "mean_pickup_dev": summary["mean_pickup_dev"],
                    "mean_dropoff_dev": summary["mean_dropoff_dev"],
                }
            )
        if chart_rows:
            report.render_metrics(chart_rows, out / "metrics.png")
            click.echo(f"figure={out / 'metrics.png'}")


@main.command()
@click.argument("tree_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--formula", required=True, help="Formula text to check against the dump.")
def check(tree_path, formula):
    """Check FORMULA against a labeled tree dump."""
    try:
        doc = json.loads(Path(tree_path).read_text(encoding="utf-8"))
        tree = ctl.LabeledTree.from_json(doc)
    except (json.JSONDecodeError, KeyError) as exc:
        _fail(f"tree:{exc}")
    try:
        parsed = ctl.parse_formula(formula)
    except ParaplanError as exc:
        _fail(f"formula:{exc}")
    result = ctl.check(tree, parsed)
    click.echo(f"formula={result.root_formula}")
    click.echo(f"verdict={'satisfied' if result.root_verdict else 'violated'}")
    try:
        summary, _ = ctl.quantify_violations(tree, parsed)
    except ParaplanError:
        click.echo("quantification=unsupported")
        return
    click.echo()
    click.echo(f"{'applicable nodes':<20}{summary.applicable_nodes}")
    click.echo(f"{'violating nodes':<20}{summary.violating_nodes}")
    click.echo(f"{'violation %':<20}{summary.violation_pct:.1f}")
    if summary.violating_nodes:
        click.echo(f"{'avg degree':<20}{summary.avg_degree:.1f}")
        click.echo(f"{'min degree':<20}{summary.min_degree:.1f}")
        click.echo(f"{'max degree':<20}{summary.max_degree:.1f}")
    click.echo(f"{'scenarios':<20}{summary.scenario_count}")
    click.echo()
    click.echo(f"applicable={summary.applicable_nodes}")
    click.echo(f"violating={summary.violating_nodes}")
    click.echo(f"pct={round_half_up(summary.violation_pct)}")
    if summary.violating_nodes:
        click.echo(f"avg={round_half_up(summary.avg_degree)}")
        click.echo(f"min={round_half_up(summary.min_degree)}")
        click.echo(f"max={round_half_up(summary.max_degree)}")
    click.echo(f"scenarios={summary.scenario_count}")


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--query", "query_json", required=True,
              help='Query JSON, e.g. \'{"qtype": "factual", "bindings": {...}}\'.')
@click.option("--budget", default=None, type=int, help="Tree-expansion budget override.")
@click.option("--seed", default=None, type=int)
@click.option("--iterations", default=150, show_default=True)
def explain(scenario_path, query_json, budget, seed, iterations):
    """Plan one epoch and answer one query."""
    try:
        scenario = load_scenario(scenario_path)
    except ValidationError as exc:
        _fail(f"scenario:{exc.field}:{exc.detail}")
    try:
        raw_query = json.loads(query_json)
    except json.JSONDecodeError as exc:
        _fail(f"query:{exc}")
    base_seed = scenario.seed if seed is None else seed
    session = Session(
        scenario,
        search_params=SearchParams(iterations=iterations, seed=base_seed),
        explain_params=ExplainParams(seed=base_seed, t3_budget=budget if budget is not None else 74),
    )
    payload = session.plan_epoch()
    if not payload["feasible"]:
        _fail("plan:infeasible epoch, no explanation target")
    if budget is not None and raw_query.get("qtype") == "tree_expansion":
        raw_query.setdefault("bindings", {})["budget"] = budget
    try:
        explanations = session.submit_queries([raw_query])
    except ParaplanError as exc:
        _fail(f"query:{exc}")
    explanation = explanations[0]
    if explanation.error:
        _fail(f"query:{explanation.error}")
    click.echo(explanation.text)
    click.echo()
    click.echo(f"qtype={explanation.query.qtype.value}")
    click.echo(f"template={explanation.template}")
    for fid, verdict in explanation.verdicts.items():
        click.echo(f"verdict_{fid}={verdict}")
    for fid, summary in explanation.summaries.items():
        if summary is None:
            continue
        click.echo(f"summary_{fid}_pct={summary.violation_pct}")
        click.echo(f"summary_{fid}_applicable={summary.applicable_nodes}")
        click.echo(f"summary_{fid}_violating={summary.violating_nodes}")
    if explanation.comparison:
        click.echo(f"recommended_score={explanation.comparison.recommended_score}")
        click.echo(f"alternative_score={explanation.comparison.alternative_score}")
    if explanation.new_iterations is not None:
        click.echo(f"new_iterations={explanation.new_iterations}")


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--scenario-dir", envvar="PARAPLAN_SCENARIO_DIR", default=None,
              help="Directory for write-through session persistence.")
def serve(port, host, scenario_dir):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    app = create_app(persist_dir=scenario_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
