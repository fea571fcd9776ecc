"""Threshold-Nash as a polynomial system over the reals, plus an exact checker.

The system uses behavioral variables x_{I,a}, expected payoffs U_i and
best-response values w_i^h, w_i^I. We only emit it (as SMT-LIB text); deciding
it is left to external tools. ``check_behavioral`` substitutes a candidate and
replaces each best-response inequality by the max it relaxes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from .game import EMPTY, Game, GameError, History, format_rational, parse_rational
from .strategy import PureStrategy, StrategyProfile
from .verify import Start, Verdict, Witness

Monomial = tuple[str, ...]  # sorted variable names, repeated for powers
Polynomial = dict[Monomial, Fraction]


# -- behavioral profiles ------------------------------------------------------------------

@dataclass(frozen=True)
class BehavioralProfile:
    """Per information set, a distribution over its actions."""

    dists: tuple[tuple[str, tuple[tuple[str, Fraction], ...]], ...]
    _table: dict[str, dict[str, Fraction]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        table = {I: dict(d) for I, d in self.dists}
        for I, d in table.items():
            if any(p < 0 for p in d.values()):
                raise GameError(f"negative probability at {I!r}")
            if sum(d.values(), Fraction(0)) != 1:
                raise GameError(f"distribution at {I!r} does not sum to 1")
        object.__setattr__(self, "_table", table)

    @staticmethod
    def of(mapping: Mapping[str, Mapping[str, Fraction | int | str]]) -> "BehavioralProfile":
        return BehavioralProfile(tuple(
            (I, tuple((a, Fraction(p)) for a, p in sorted(d.items()))) for I, d in sorted(mapping.items())
        ))

    @staticmethod
    def pure(sigma: StrategyProfile) -> "BehavioralProfile":
        return BehavioralProfile.of({I: {a: 1} for s in sigma.strategies for I, a in s.choices})

    def prob(self, infoset: str, action: str) -> Fraction:
        return self._table[infoset].get(action, Fraction(0))

    def check(self, game: Game) -> None:
        """Dimension check against ``game``."""
        if set(self._table) != set(game.infosets):
            missing = sorted(set(game.infosets) - set(self._table))
            extra = sorted(set(self._table) - set(game.infosets))
            raise GameError(f"behavioral profile mismatch: missing {missing}, unknown {extra}")
        for I, d in self._table.items():
            unknown = set(d) - set(game.infosets[I].actions)
            if unknown:
                raise GameError(f"unknown actions {sorted(unknown)} at {I!r}")

    def to_json(self, game: Game) -> dict[str, dict[str, dict[str, str]]]:
        out: dict[str, dict[str, dict[str, str]]] = {}
        for I, d in self.dists:
            out.setdefault(str(game.player_of(I)), {})[I] = {a: format_rational(p) for a, p in d}
        return out


def parse_behavioral(game: Game, data: bytes | str | Mapping[str, Any]) -> BehavioralProfile:
    doc = json.loads(data) if isinstance(data, (bytes, str)) else data
    if not isinstance(doc, Mapping):
        raise GameError("behavioral profile must be a JSON object")
    flat: dict[str, dict[str, Fraction]] = {}
    for player, sets in doc.items():
        if not isinstance(sets, Mapping):
            raise GameError(f"player {player!r}: expected an object of information sets")
        for I, dist in sets.items():
            if I not in game.infosets:
                raise GameError(f"unknown information set {I!r}")
            if str(game.player_of(I)) != str(player):
                raise GameError(f"{I!r} belongs to player {game.player_of(I)}, not {player}")
            if not isinstance(dist, Mapping):
                raise GameError(f"{I!r}: expected an action distribution")
            flat[I] = {a: parse_rational(p) for a, p in dist.items()}
    beta = BehavioralProfile.of(flat)
    beta.check(game)
    return beta


# -- the polynomial system ----------------------------------------------------------------

@dataclass(frozen=True)
class PolyConstraint:
    name: str
    poly: tuple[tuple[Monomial, Fraction], ...]
    sense: str  # "=" or ">="
    rhs: Fraction = Fraction(0)

    @property
    def degree(self) -> int:
        return max((len(m) for m, _ in self.poly), default=0)

    def lhs(self, values: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for mono, c in self.poly:
            term = c
            for x in mono:
                term *= values[x]
            total += term
        return total

    def holds(self, values: Mapping[str, Fraction]) -> bool:
        lhs = self.lhs(values)
        return lhs == self.rhs if self.sense == "=" else lhs >= self.rhs


@dataclass(frozen=True)
class EtrSystem:
    variables: tuple[str, ...]
    constraints: tuple[PolyConstraint, ...]
    threshold: Fraction

    @property
    def x_variables(self) -> tuple[str, ...]:
        return tuple(v for v in self.variables if v.startswith("x["))

    @property
    def degree(self) -> int:
        return max((c.degree for c in self.constraints), default=0)

    def violations(self, values: Mapping[str, Fraction]) -> list[str]:
        return [c.name for c in self.constraints if not c.holds(values)]

    def to_smtlib(self) -> str:
        lines = ["(set-logic QF_NRA)"]
        lines += [f"(declare-fun {_sym(v)} () Real)" for v in self.variables]
        for c in self.constraints:
            op = "=" if c.sense == "=" else ">="
            lines.append(f"(assert (! ({op} {_poly_smt(c.poly)} {_num_smt(c.rhs)}) :named {_sym(c.name)}))")
        lines += ["(check-sat)", "(get-model)", ""]
        return "\n".join(lines)


def _sym(name: str) -> str:
    return name if all(ch.isalnum() or ch in "_-.~!@$%^&*+<>=?/" for ch in name) else f"|{name}|"


def _num_smt(q: Fraction) -> str:
    mag = str(abs(q.numerator)) if q.denominator == 1 else f"(/ {abs(q.numerator)} {q.denominator})"
    return f"(- {mag})" if q < 0 else mag


def _poly_smt(poly: tuple[tuple[Monomial, Fraction], ...]) -> str:
    terms = []
    for mono, c in poly:
        factors = ([_num_smt(c)] if c != 1 or not mono else []) + [_sym(x) for x in mono]
        terms.append(factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})")
    if not terms:
        return "0"
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


def x_name(I: str, a: str) -> str:
    return f"x[{I}][{a}]"


def u_name(i: int) -> str:
    return f"U{i}"


def w_name(i: int, h: History) -> str:
    """w_i^h for h = ε or h = h_i(J)·(J,a), named by its last pair."""
    return f"w{i}[]" if not h else f"w{i}[{h[-1][0]}][{h[-1][1]}]"


def w_set_name(i: int, I: str) -> str:
    return f"w{i}[{I}]"


def _path_monomial(game: Game, v: str, skip: int | None = None) -> Monomial:
    return tuple(sorted(
        x_name(I, a) for j, h in enumerate(game.histories[v], start=1) if j != skip for I, a in h
    ))


def _add(poly: Polynomial, mono: Monomial, c: Fraction) -> None:
    if c:
        poly[mono] = poly.get(mono, Fraction(0)) + c
        if not poly[mono]:
            del poly[mono]


def _frozen(poly: Polynomial) -> tuple[tuple[Monomial, Fraction], ...]:
    return tuple(sorted(poly.items()))


def _player_histories(game: Game, i: int) -> list[History]:
    """ε plus h_i(J)·(J,a) for every set J of player i and action a."""
    out = [EMPTY]
    for J in game.player_infosets[i]:
        base = game.infoset_history(J)
        out += [base + ((J, a),) for a in game.infosets[J].sorted_actions]
    return out


def emit_etr(game: Game, threshold: Fraction | int | str) -> EtrSystem:
    lam = parse_rational(threshold) if isinstance(threshold, str) else Fraction(threshold)
    variables: list[str] = []
    rows: list[PolyConstraint] = []
    n = game.players
    for I in sorted(game.infosets):
        xs = [x_name(I, a) for a in game.infosets[I].sorted_actions]
        variables += xs
        rows.append(PolyConstraint(f"sum_{I}", tuple(((x,), Fraction(1)) for x in xs), "=", Fraction(1)))
        rows += [PolyConstraint(f"pos_{x}", (((x,), Fraction(1)),), ">=") for x in xs]
    variables += [u_name(i) for i in range(1, n + 1)]
    for i in range(1, n + 1):
        poly: Polynomial = {(u_name(i),): Fraction(1)}
        for v in game.leaves:
            _add(poly, _path_monomial(game, v), -game.payoff(v, i) * game.reach[v])
        rows.append(PolyConstraint(f"payoff_{i}", _frozen(poly), "="))
    for i in range(1, n + 1):
        leaves_at, sets_at = game.leaves_at(i), game.infosets_at(i)
        for h in _player_histories(game, i):
            w = w_name(i, h)
            variables.append(w)
            poly = {(w,): Fraction(1)}
            for v in leaves_at.get(h, ()):
                _add(poly, _path_monomial(game, v, skip=i), -game.payoff(v, i) * game.reach[v])
            for J in sets_at.get(h, ()):
                _add(poly, (w_set_name(i, J),), Fraction(-1))
            rows.append(PolyConstraint(f"best_{w}", _frozen(poly), "="))
        for I in game.player_infosets[i]:
            wI = w_set_name(i, I)
            variables.append(wI)
            base = game.infoset_history(I)
            for a in game.infosets[I].sorted_actions:
                wa = w_name(i, base + ((I, a),))
                rows.append(PolyConstraint(f"relax_{wI}_{a}", (((wI,), Fraction(1)), ((wa,), Fraction(-1))), ">="))
        rows.append(PolyConstraint(f"incentive_{i}", (((u_name(i),), Fraction(1)), ((w_name(i, EMPTY),), Fraction(-1))), ">="))
    obj = {(u_name(i),): w for i, w in enumerate(game.objective, start=1) if w}
    rows.append(PolyConstraint("threshold", _frozen(obj), ">=", lam))
    return EtrSystem(tuple(variables), tuple(rows), lam)


# -- exact evaluation -----------------------------------------------------------------------

def _reach(game: Game, beta: BehavioralProfile, v: str, skip: int | None = None) -> Fraction:
    p = game.reach[v]
    for j, h in enumerate(game.histories[v], start=1):
        if j == skip:
            continue
        for I, a in h:
            p *= beta.prob(I, a)
            if not p:
                return p
    return p


@dataclass(frozen=True)
class Evaluation:
    utilities: tuple[Fraction, ...]
    best_response: tuple[Fraction, ...]
    responses: tuple[PureStrategy, ...]
    objective: Fraction
    values: dict[str, Fraction]


def evaluate(game: Game, beta: BehavioralProfile) -> Evaluation:
    """U_i, best-response values, one best response per player, and a full
    assignment of the system's variables (w set to the exact maxima)."""
    beta.check(game)
    values: dict[str, Fraction] = {}
    for I in game.infosets:
        for a in game.infosets[I].actions:
            values[x_name(I, a)] = beta.prob(I, a)
    utils, best, responses = [], [], []
    for i in range(1, game.players + 1):
        u = sum((game.payoff(v, i) * _reach(game, beta, v) for v in game.leaves), Fraction(0))
        values[u_name(i)] = u
        utils.append(u)
        leaves_at, sets_at = game.leaves_at(i), game.infosets_at(i)
        choice: dict[str, str] = {}

        def node(h: History) -> Fraction:
            total = sum((game.payoff(v, i) * _reach(game, beta, v, skip=i) for v in leaves_at.get(h, ())), Fraction(0))
            for J in sets_at.get(h, ()):
                total += infoset(J)
            values[w_name(i, h)] = total
            return total

        def infoset(J: str) -> Fraction:
            base = game.infoset_history(J)
            best_a, best_v = None, None
            for a in game.infosets[J].sorted_actions:
                val = node(base + ((J, a),))
                if best_v is None or val > best_v:
                    best_a, best_v = a, val
            choice[J] = best_a
            values[w_set_name(i, J)] = best_v
            return best_v

        best.append(node(EMPTY))
        responses.append(PureStrategy(i, tuple(sorted(choice.items()))))
    objective = sum((w * u for w, u in zip(game.objective, utils)), Fraction(0))
    return Evaluation(tuple(utils), tuple(best), tuple(responses), objective, values)


def check_behavioral(game: Game, beta: BehavioralProfile, threshold: Fraction | int | None = None) -> Verdict:
    """Accept iff every U_i equals player i's best-response value and ω(U) ≥ λ."""
    ev = evaluate(game, beta)
    for i, (u, b) in enumerate(zip(ev.utilities, ev.best_response), start=1):
        if b != u:
            return Verdict(False, Witness(i, Start(i), ev.responses[i - 1], u, b))
    if threshold is not None and ev.objective < Fraction(threshold):
        return Verdict(False, reason=f"objective {format_rational(ev.objective)} is below {format_rational(Fraction(threshold))}")
    return Verdict(True)
