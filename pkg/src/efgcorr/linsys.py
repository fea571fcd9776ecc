"""Exact-rational linear systems S(S) for the polynomial correlated concepts.

Given a support S of pure profiles, the system has a probability variable x_k
per profile, a variable z_h per relevant history h (the probability that the
mediator's draw is consistent with h), and per-trigger payoff variables. The
best-deviation maxima are encoded only through lower-bound inequalities: the
incentive row caps every bound from above, so no max operator is needed.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .game import Game, GameError, History, format_rational
from .histories import Joint, deviation_history, relevant_set
from .strategy import CorrelationPlan, StrategyProfile, check_profile, consistent
from .verify import Concept

SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[str, Fraction], ...]
    sense: str
    rhs: Fraction

    def lhs(self, assignment: Mapping[str, Fraction]) -> Fraction:
        return sum((a * assignment[v] for v, a in self.coeffs), Fraction(0))

    def holds(self, assignment: Mapping[str, Fraction]) -> bool:
        lhs = self.lhs(assignment)
        if self.sense == "=":
            return lhs == self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs <= self.rhs


@dataclass
class LinearSystem:
    """Variables are nonnegative unless listed in ``free``; ``objective`` is maximized."""

    variables: list[str] = field(default_factory=list)
    free: set[str] = field(default_factory=set)
    constraints: list[Constraint] = field(default_factory=list)
    objective: tuple[tuple[str, Fraction], ...] | None = None
    profiles: tuple[StrategyProfile, ...] = ()
    _declared: set[str] = field(default_factory=set, repr=False)

    def declare(self, name: str, free: bool = False) -> str:
        if name in self._declared:
            raise GameError(f"variable {name!r} declared twice")
        self._declared.add(name)
        self.variables.append(name)
        if free:
            self.free.add(name)
        return name

    def add(self, name: str, coeffs: Iterable[tuple[str, Fraction]] | Mapping[str, Fraction],
            sense: str, rhs: Fraction | int = 0) -> Constraint:
        if sense not in SENSES:
            raise ValueError(f"bad sense {sense!r}")
        c = Constraint(name, self._merge(coeffs), sense, Fraction(rhs))
        self.constraints.append(c)
        return c

    def maximize(self, coeffs: Iterable[tuple[str, Fraction]] | Mapping[str, Fraction]) -> None:
        self.objective = self._merge(coeffs)

    def _merge(self, coeffs) -> tuple[tuple[str, Fraction], ...]:
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: dict[str, Fraction] = {}
        for v, a in items:
            if v not in self._declared:
                raise GameError(f"undeclared variable {v!r}")
            merged[v] = merged.get(v, Fraction(0)) + Fraction(a)
        return tuple((v, a) for v, a in merged.items() if a)

    def violations(self, assignment: Mapping[str, Fraction]) -> list[str]:
        bad = [v for v in self.variables if v not in self.free and assignment[v] < 0]
        bad += [c.name for c in self.constraints if not c.holds(assignment)]
        return bad

    def objective_value(self, assignment: Mapping[str, Fraction]) -> Fraction:
        return sum((a * assignment[v] for v, a in self.objective or ()), Fraction(0))

    def to_text(self) -> str:
        lines = ["variables:"]
        lines += [f"  {v} {'free' if v in self.free else '>= 0'}" for v in self.variables]
        if self.objective is not None:
            lines.append(f"maximize: {_linear(self.objective)}")
        lines += [f"{c.name}: {_linear(c.coeffs)} {c.sense} {format_rational(c.rhs)}" for c in self.constraints]
        return "\n".join(lines) + "\n"


def _linear(coeffs: Sequence[tuple[str, Fraction]]) -> str:
    if not coeffs:
        return "0"
    parts = []
    for k, (v, a) in enumerate(coeffs):
        term = f"{format_rational(abs(a))}*{v}"
        if k == 0:
            parts.append(term if a > 0 else f"-{term}")
        else:
            parts.append(f"{'+' if a > 0 else '-'} {term}")
    return " ".join(parts)


def z_name(h: Joint) -> str:
    digest = hashlib.sha1(repr(h).encode()).hexdigest()[:12]
    return f"z_{digest}"


@dataclass
class _Builder:
    game: Game
    concept: Concept
    system: LinearSystem
    z: dict[Joint, str]

    def term(self, v: str, i: int, h: Joint) -> tuple[str, Fraction]:
        return self.z[h], self.game.payoff(v, i) * self.game.reach[v]

    def define(self, name: str, var: str, terms: list[tuple[str, Fraction]]) -> None:
        """var = Σ terms, written as var - Σ terms = 0."""
        self.system.add(name, [(var, Fraction(1))] + [(t, -a) for t, a in terms], "=")

    def honest_terms(self, i: int, leaves: Iterable[str]) -> list[tuple[str, Fraction]]:
        return [self.term(v, i, self.game.histories[v]) for v in leaves]


def build_system(game: Game, concept: Concept | str, support: Sequence[StrategyProfile],
                 threshold: Fraction | int | None = None, maximize: bool = False) -> LinearSystem:
    """The linear system S(support) for ``concept`` in threshold or maximize mode."""
    concept = Concept(concept)
    if (threshold is None) == (not maximize):
        raise ValueError("give exactly one of threshold or maximize")
    if not support:
        raise GameError("the support must be non-empty")
    keys = [s.key for s in support]
    if len(set(keys)) != len(keys):
        raise GameError("the support repeats a profile")
    for s in support:
        check_profile(game, s)
    rset = relevant_set(game, concept)  # raises for NFCE

    system = LinearSystem(profiles=tuple(support))
    xs = [system.declare(f"x_{k}") for k in range(len(support))]
    for x in xs:
        system.add(f"c1_{x}", [(x, 1)], "<=", 1)
    system.add("c2", [(x, 1) for x in xs], "=", 1)

    z: dict[Joint, str] = {}
    for r in rset.histories:
        name = z_name(r.histories)
        if name in system._declared:
            raise AssertionError(f"history digest collision on {name}")
        z[r.histories] = system.declare(name, free=True)
    for r in rset.histories:
        terms = [(xs[k], Fraction(-1)) for k, s in enumerate(support) if consistent(game, s, r.histories)]
        system.add(f"c3_{z[r.histories]}", [(z[r.histories], Fraction(1))] + terms, "=")

    b = _Builder(game, concept, system, z)
    for i in range(1, game.players + 1):
        if concept == Concept.NFCCE:
            _nfcce_block(b, i)
            continue
        for I in game.player_infosets[i]:
            if concept == Concept.EFCE:
                for a in game.infosets[I].sorted_actions:
                    _efce_block(b, i, I, a)
            elif concept == Concept.EFCCE:
                _efcce_block(b, i, I)
            elif concept == Concept.AFCE:
                for a in game.infosets[I].sorted_actions:
                    _afce_block(b, i, I, a)
            else:
                _afcce_block(b, i, I)

    welfare = [(z[game.histories[v]], game.welfare(v) * game.reach[v]) for v in game.leaves]
    if maximize:
        system.maximize(welfare)
    else:
        system.add("threshold", welfare, ">=", Fraction(threshold))

    budget = len(rset) + len(support) + sum(
        len(I_i) * (len(I_i) + 1) * game.max_actions ** 2 for I_i in game.player_infosets.values()
    )
    if len(system.variables) + len(system.constraints) > 4 * budget + 4 * game.players + 4:
        raise AssertionError("linear system exceeds its polynomial size budget")
    return system


def _recursion(b: _Builder, i: int, prefix: str, start: Sequence[str], dev: callable) -> None:
    """Deviation-value equalities and relaxation rows over player i's sets in ``start``.

    ``dev(v)`` gives the deviation history used for leaf ``v``.
    """
    game, system = b.game, b.system
    leaves_at, infosets_at = game.leaves_at(i), game.infosets_at(i)
    for J in start:
        system.declare(f"{prefix}_{J}", free=True)
    for J in start:
        for a in game.infosets[J].sorted_actions:
            system.declare(f"{prefix}_{J}_{a}", free=True)
    for J in start:
        for a in game.infosets[J].sorted_actions:
            h: History = game.infoset_history(J) + ((J, a),)
            terms = [b.term(v, i, dev(v)) for v in leaves_at.get(h, ())]
            terms += [(f"{prefix}_{K}", Fraction(1)) for K in infosets_at.get(h, ())]
            b.define(f"dev_{prefix}_{J}_{a}", f"{prefix}_{J}_{a}", terms)
            system.add(f"relax_{prefix}_{J}_{a}", [(f"{prefix}_{J}", 1), (f"{prefix}_{J}_{a}", -1)], ">=")


def _honest_block(b: _Builder, i: int, I: str, a: str | None) -> str:
    game = b.game
    leaves = [v for v in game.leaves_below(I) if a is None or game.action_at(I, v) == a]
    u = b.system.declare(f"u_{i}_{I}" + (f"_{a}" if a is not None else ""), free=True)
    b.define(f"honest_{u}", u, b.honest_terms(i, leaves))
    return u


def _efce_block(b: _Builder, i: int, I: str, a: str) -> None:
    u = _honest_block(b, i, I, a)
    prefix = f"v_{i}_{I}_{a}"
    _recursion(b, i, prefix, b.game.below_infosets(I),
               lambda v: deviation_history(b.game, Concept.EFCE, v, i, I, a))
    b.system.add(f"incentive_{prefix}", [(u, 1), (f"{prefix}_{I}", -1)], ">=")


def _efcce_block(b: _Builder, i: int, I: str) -> None:
    u = _honest_block(b, i, I, None)
    prefix = f"v_{i}_{I}"
    _recursion(b, i, prefix, b.game.below_infosets(I),
               lambda v: deviation_history(b.game, Concept.EFCCE, v, i, I))
    b.system.add(f"incentive_{prefix}", [(u, 1), (f"{prefix}_{I}", -1)], ">=")


def _nfcce_block(b: _Builder, i: int) -> None:
    game, system = b.game, b.system
    u = system.declare(f"u_{i}", free=True)
    b.define(f"honest_{u}", u, b.honest_terms(i, game.leaves))
    prefix = f"v_{i}_root"
    dev = lambda v: deviation_history(game, Concept.NFCCE, v, i)  # noqa: E731
    _recursion(b, i, prefix, game.player_infosets[i], dev)
    root = system.declare(prefix, free=True)
    terms = [b.term(v, i, dev(v)) for v in game.leaves_at(i).get((), ())]
    terms += [(f"{prefix}_{J}", Fraction(1)) for J in game.infosets_at(i).get((), ())]
    b.define(f"dev_{prefix}", root, terms)
    system.add(f"incentive_{prefix}", [(u, 1), (root, -1)], ">=")


def _afce_block(b: _Builder, i: int, I: str, a: str) -> None:
    game, system = b.game, b.system
    u = _honest_block(b, i, I, a)
    for alt in game.infosets[I].sorted_actions:
        if alt == a:
            continue  # deviating to the recommended action changes nothing
        var = system.declare(f"v_{i}_{I}_{a}_{I}_{alt}", free=True)
        leaves = [v for v in game.leaves_below(I) if game.action_at(I, v) == alt]
        terms = [b.term(v, i, deviation_history(game, Concept.AFCE, v, i, I, a)) for v in leaves]
        b.define(f"dev_{var}", var, terms)
        system.add(f"incentive_{var}", [(u, 1), (var, -1)], ">=")


def _afcce_block(b: _Builder, i: int, I: str) -> None:
    game, system = b.game, b.system
    u = _honest_block(b, i, I, None)
    for alt in game.infosets[I].sorted_actions:
        var = system.declare(f"v_{i}_{I}_{I}_{alt}", free=True)
        leaves = [v for v in game.leaves_below(I) if game.action_at(I, v) == alt]
        terms = [b.term(v, i, deviation_history(game, Concept.AFCCE, v, i, I)) for v in leaves]
        b.define(f"dev_{var}", var, terms)
        system.add(f"incentive_{var}", [(u, 1), (var, -1)], ">=")


def extract_plan(system: LinearSystem, assignment: Mapping[str, Fraction]) -> CorrelationPlan:
    """Read the x-variables of a solution back as a correlation plan."""
    probs = [(s, Fraction(assignment[f"x_{k}"])) for k, s in enumerate(system.profiles)]
    if sum((p for _, p in probs), Fraction(0)) != 1:
        raise ArithmeticError("internal error: x-variables do not sum to 1")
    return CorrelationPlan.of((s, p) for s, p in probs if p)
