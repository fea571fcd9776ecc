"""Command-line entry point.

Exit codes: 0 verified / feasible / done, 1 rejected / infeasible, 2 bad input.
Game arguments may be omitted or given as ``-`` to read the game from stdin.
"""
from __future__ import annotations

import itertools
import json
import sys
from fractions import Fraction
from typing import Any

import click

from .game import Game, GameError, format_history, format_rational, parse_game, parse_rational
from .histories import relevant_set
from .linsys import build_system, extract_plan
from .lp import solve as solve_lp
from .nash_etr import check_behavioral, emit_etr, evaluate, parse_behavioral
from .oracle import ORACLE_CAP, oracle_solve
from .reductions import parse_dimacs, parse_qbf, reduce_qbf, reduce_sat3
from .strategy import (
    DEFAULT_CAP,
    CorrelationPlan,
    ScaleError,
    count_strategies,
    enumerate_profiles,
    expected_payoffs,
    parse_plan,
    plan_to_json,
    profile_from_json,
)
from .verify import Concept, verify

EXIT_OK, EXIT_REJECT, EXIT_USAGE = 0, 1, 2

CONCEPTS = click.Choice([c.value for c in Concept], case_sensitive=False)
LP_CONCEPTS = click.Choice([c.value for c in Concept if c not in (Concept.NASH, Concept.NFCE)], case_sensitive=False)


class Rational(click.ParamType):
    name = "p/q"

    def convert(self, value: Any, param, ctx) -> Fraction:
        if isinstance(value, Fraction):
            return value
        try:
            return parse_rational(value)
        except GameError as exc:
            self.fail(str(exc), param, ctx)


RATIONAL = Rational()


def _read(path: str | None) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise GameError(f"cannot read {path}: {exc.strerror}") from exc


def _game(path: str | None) -> Game:
    return parse_game(_read(path))


def _emit(as_json: bool, doc: dict[str, Any], text: str) -> None:
    if as_json:
        click.echo(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        click.echo(text)


def _payoff_doc(game: Game, mu: CorrelationPlan) -> dict[str, Any]:
    pay, obj = expected_payoffs(game, mu)
    return {"payoffs": [format_rational(u) for u in pay], "objective": format_rational(obj)}


def _verdict_text(verdict) -> str:
    if verdict.ok:
        return "ok"
    if verdict.witness is None:
        return f"rejected: {verdict.reason}"
    w = verdict.witness
    return (f"rejected: player {w.player} gains by deviating "
            f"({format_rational(w.honest)} -> {format_rational(w.deviation)}) with {dict(w.beta.choices)}")


json_option = click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")


@click.group()
def main() -> None:
    """Correlated-equilibrium tools for extensive-form games."""


@main.command()
@click.argument("game", required=False)
@json_option
def validate(game: str | None, as_json: bool) -> None:
    """Check a game document and summarize it."""
    g = _game(game)
    sizes = [count_strategies(g, g.player_infosets[i]) for i in range(1, g.players + 1)]
    doc = {
        "players": g.players,
        "nodes": len(g.nodes),
        "leaves": len(g.leaves),
        "infosets": len(g.infosets),
        "strategies": sizes,
    }
    text = "\n".join(f"{k}: {v}" for k, v in doc.items())
    _emit(as_json, doc, text)


@main.command()
@click.argument("game", required=False)
@click.option("--concept", type=CONCEPTS, required=True)
@json_option
def histories(game: str | None, concept: str, as_json: bool) -> None:
    """List the honest and deviation histories used by a concept's system."""
    g = _game(game)
    rset = relevant_set(g, Concept(concept))
    rows = [{"kind": r.kind, "histories": [format_history(h) for h in r.histories]} for r in rset.histories]
    doc = {"concept": rset.concept.value, "honest": rset.honest, "deviation": rset.deviation,
           "total": len(rset), "bound": rset.bound, "histories": rows}
    lines = [f"{rset.concept.value}: {len(rset)} histories "
             f"({rset.honest} honest, {rset.deviation} deviation; bound {rset.bound})"]
    lines += [f"{r['kind']:9} " + " | ".join(r["histories"]) for r in rows]
    _emit(as_json, doc, "\n".join(lines))


@main.command("verify")
@click.argument("game")
@click.argument("plan")
@click.option("--concept", type=CONCEPTS, required=True)
@click.option("--cap", type=int, default=DEFAULT_CAP, show_default=True, help="Enumeration cap on |Σ_i|.")
@json_option
def verify_cmd(game: str, plan: str, concept: str, cap: int, as_json: bool) -> None:
    """Check a correlation plan against a concept's incentive constraints.

    With ``--concept nash`` PLAN may also be a behavioral profile.
    """
    g = _game(game)
    c = Concept(concept)
    data = json.loads(_read(plan))
    if c == Concept.NASH and isinstance(data, dict) and "plan" not in data:
        beta = parse_behavioral(g, data)
        verdict = verify(g, beta, c)
        ev = evaluate(g, beta)
        payoffs = {"payoffs": [format_rational(u) for u in ev.utilities], "objective": format_rational(ev.objective)}
    else:
        mu = parse_plan(g, data)
        verdict = verify(g, mu, c, cap=cap)
        payoffs = _payoff_doc(g, mu)
    doc = {"concept": c.value, **verdict.to_json(), **payoffs}
    _emit(as_json, doc, _verdict_text(verdict))
    sys.exit(EXIT_OK if verdict.ok else EXIT_REJECT)


def _load_support(g: Game, path: str):
    doc = json.loads(_read(path))
    if isinstance(doc, dict) and "plan" in doc:
        return [s for s, _ in parse_plan(g, doc)]
    if isinstance(doc, dict) and "support" in doc:
        doc = doc["support"]
    if not isinstance(doc, list):
        raise GameError("support file must be a list of profiles, {\"support\": [...]}, or a plan")
    return [profile_from_json(g, p) for p in doc]


def _support_engine(g: Game, concept: Concept, threshold: Fraction | None, maximize: bool,
                    support_file: str | None, budget: int, cap: int):
    """Returns (status, plan, value, lp_calls) with status in feasible/infeasible/budget."""
    if support_file is not None:
        support = _load_support(g, support_file)
        system = build_system(g, concept, support, threshold=threshold, maximize=maximize)
        result = solve_lp(system)
        if not result.feasible:
            return "infeasible", None, None, 1
        mu = extract_plan(system, result.assignment)
        return "feasible", mu, expected_payoffs(g, mu)[1], 1
    # Supports of increasing size, lexicographic within a size; worst case exponential.
    profiles = enumerate_profiles(g, cap)
    limit = len(relevant_set(g, concept)) + 1
    calls = 0
    for size in range(1, min(limit, len(profiles)) + 1):
        for combo in itertools.combinations(profiles, size):
            if calls >= budget:
                return "budget", None, None, calls
            calls += 1
            system = build_system(g, concept, list(combo), threshold=threshold)
            result = solve_lp(system)
            if result.feasible:
                mu = extract_plan(system, result.assignment)
                return "feasible", mu, expected_payoffs(g, mu)[1], calls
    return "infeasible", None, None, calls


@main.command("solve")
@click.argument("game", required=False)
@click.option("--concept", type=CONCEPTS, required=True)
@click.option("--threshold", type=RATIONAL, default=None, help="Decide whether welfare >= p/q is reachable.")
@click.option("--maximize", is_flag=True, help="Report the optimal objective.")
@click.option("--engine", type=click.Choice(["oracle", "support"]), default="oracle", show_default=True)
@click.option("--support-file", default=None, help="Profiles for the support engine.")
@click.option("--budget", type=int, default=1000, show_default=True, help="LP calls for support enumeration.")
@click.option("--cap", type=int, default=ORACLE_CAP, show_default=True, help="Cap on |Σ|.")
@json_option
def solve_cmd(game: str | None, concept: str, threshold: Fraction | None, maximize: bool, engine: str,
              support_file: str | None, budget: int, cap: int, as_json: bool) -> None:
    """Decide the threshold problem or optimize the objective for a concept."""
    if (threshold is None) == (not maximize):
        raise click.UsageError("give exactly one of --threshold or --maximize")
    g = _game(game)
    c = Concept(concept)
    doc: dict[str, Any] = {"concept": c.value, "engine": engine}
    if engine == "oracle":
        report = oracle_solve(g, c, threshold=threshold, maximize=maximize, cap=cap)
        status = "feasible" if report.feasible else "infeasible"
        plan, value = report.plan, report.value
        doc["sigma_size"] = report.sigma_size
    else:
        if c in (Concept.NASH, Concept.NFCE):
            raise click.UsageError(f"the support engine has no linear system for {c.value}")
        if maximize and support_file is None:
            raise click.UsageError("--maximize with the support engine needs --support-file")
        status, plan, value, calls = _support_engine(g, c, threshold, maximize, support_file, budget, cap)
        doc["lp_calls"] = calls
    doc["status"] = status
    if value is not None:
        doc["value"] = format_rational(value)
    if plan is not None:
        doc.update(plan_to_json(plan))
    if status == "feasible":
        text = format_rational(value) if maximize else f"feasible (objective {format_rational(value)})"
    elif status == "budget":
        text = f"undecided: budget of {budget} LP calls exhausted"
    else:
        text = "infeasible"
    _emit(as_json, doc, text)
    sys.exit(EXIT_OK if status == "feasible" else EXIT_REJECT)


@main.command("lp-export")
@click.argument("game")
@click.argument("support_file")
@click.option("--concept", type=LP_CONCEPTS, required=True)
@click.option("--threshold", type=RATIONAL, default=None)
@click.option("--maximize", is_flag=True)
def lp_export(game: str, support_file: str, concept: str, threshold: Fraction | None, maximize: bool) -> None:
    """Print the linear system for a given support."""
    if (threshold is None) == (not maximize):
        raise click.UsageError("give exactly one of --threshold or --maximize")
    g = _game(game)
    system = build_system(g, Concept(concept), _load_support(g, support_file), threshold=threshold, maximize=maximize)
    click.echo(system.to_text(), nl=False)


@main.command("reduce-qbf")
@click.argument("formula", required=False)
@click.option("--pad", is_flag=True, help="Insert fresh variables to make the prefix alternate.")
def reduce_qbf_cmd(formula: str | None, pad: bool) -> None:
    """Build the game for a quantified DNF formula."""
    click.echo(reduce_qbf(parse_qbf(_read(formula), pad=pad)).dumps())


@main.command("reduce-sat3")
@click.argument("cnf", required=False)
def reduce_sat3_cmd(cnf: str | None) -> None:
    """Build the game for a DIMACS CNF formula."""
    click.echo(reduce_sat3(parse_dimacs(_read(cnf))).dumps())


@main.command("nash-etr")
@click.argument("game", required=False)
@click.option("--threshold", type=RATIONAL, required=True)
def nash_etr_cmd(game: str | None, threshold: Fraction) -> None:
    """Print the polynomial Threshold-Nash system in SMT-LIB form."""
    click.echo(emit_etr(_game(game), threshold).to_smtlib(), nl=False)


@main.command("nash-check")
@click.argument("game")
@click.argument("profile")
@click.option("--threshold", type=RATIONAL, default=None)
@json_option
def nash_check(game: str, profile: str, threshold: Fraction | None, as_json: bool) -> None:
    """Check a behavioral profile for Nash equilibrium (and the threshold)."""
    g = _game(game)
    beta = parse_behavioral(g, _read(profile))
    verdict = check_behavioral(g, beta, threshold)
    ev = evaluate(g, beta)
    doc = {**verdict.to_json(), "payoffs": [format_rational(u) for u in ev.utilities],
           "best_response": [format_rational(b) for b in ev.best_response],
           "objective": format_rational(ev.objective)}
    _emit(as_json, doc, _verdict_text(verdict))
    sys.exit(EXIT_OK if verdict.ok else EXIT_REJECT)


def run(argv: list[str] | None = None) -> int:
    """Run the CLI and return its exit code (input errors map to 2)."""
    try:
        main.main(args=argv, prog_name="efgcorr", standalone_mode=False)
    except SystemExit as exc:
        return int(exc.code or 0)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except (GameError, ScaleError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return EXIT_OK


def entry() -> None:
    sys.exit(run())
