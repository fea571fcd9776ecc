"""Exact equilibrium checks for a correlation plan.

Every incentive constraint is compared in its multiplied-through form, so a
conditioning event of probability zero yields 0 >= 0 and never fails.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Union

from .game import CHANCE, LEAF, Game, GameError, History, format_rational
from .strategy import (
    DEFAULT_CAP,
    CorrelationPlan,
    PartialStrategy,
    PureStrategy,
    ScaleError,
    StrategyProfile,
    apply_deviation,
    check_plan,
    count_strategies,
    enumerate_partial,
    enumerate_pure_strategies,
    outcome,
)


class Concept(str, enum.Enum):
    NASH = "nash"
    NFCE = "nfce"
    NFCCE = "nfcce"
    EFCE = "efce"
    EFCCE = "efcce"
    AFCE = "afce"
    AFCCE = "afcce"

    @classmethod
    def _missing_(cls, value: object) -> "Concept | None":
        if isinstance(value, str) and value.lower() != value:
            return cls.__members__.get(value.upper())
        return None

    @classmethod
    def parse(cls, text: str) -> "Concept":
        try:
            return cls(text.lower())
        except ValueError:
            raise GameError(f"unknown concept {text!r}") from None


# -- conditioning events ----------------------------------------------------------

@dataclass(frozen=True)
class Start:
    """No conditioning: the deviator commits before play."""

    player: int


@dataclass(frozen=True)
class Recommend:
    """Player ``alpha.player`` was recommended the full strategy ``alpha``."""

    alpha: PureStrategy

    @property
    def player(self) -> int:
        return self.alpha.player


@dataclass(frozen=True)
class Reach:
    player: int
    infoset: str


@dataclass(frozen=True)
class ReachRecommend:
    player: int
    infoset: str
    action: str


Event = Union[Start, Recommend, Reach, ReachRecommend]


def _admits(event: Event, sigma: StrategyProfile) -> bool:
    if isinstance(event, Recommend):
        return sigma[event.player].choices == event.alpha.choices
    if isinstance(event, ReachRecommend):
        return sigma.get(event.infoset) == event.action
    return True


def _below(game: Game, event: Event, v: str) -> bool:
    if isinstance(event, (Reach, ReachRecommend)):
        return game.passes(event.infoset, v)
    return True


def conditional_weight(game: Game, mu: CorrelationPlan, event: Event, sigma: StrategyProfile, v: str) -> Fraction:
    """Numerator of P_μ(σ, v | event)."""
    p = mu.prob(sigma)
    if not p or not _admits(event, sigma) or not _below(game, event, v):
        return Fraction(0)
    for leaf, pc in outcome(game, sigma):
        if leaf == v:
            return p * pc
    return Fraction(0)


def denominator(game: Game, mu: CorrelationPlan, event: Event) -> Fraction:
    """Probability of the conditioning event under μ and chance."""
    total = Fraction(0)
    for sigma, p in mu:
        if not _admits(event, sigma):
            continue
        if isinstance(event, (Reach, ReachRecommend)):
            total += p * _reach_probability(game, sigma, event.infoset)
        else:
            total += p
    return total


def _reach_probability(game: Game, sigma: StrategyProfile, infoset: str) -> Fraction:
    members = set(game.members.get(infoset, ()))
    total = Fraction(0)
    stack = [(game.root, Fraction(1))]
    while stack:
        v, p = stack.pop()
        node = game.nodes[v]
        if v in members:
            total += p
            continue
        if node.kind == CHANCE:
            stack.extend((e.child, p * e.prob) for e in node.edges)
        elif node.kind != LEAF:
            stack.append((node.child(sigma.table[node.infoset]), p))
    return total


def honest_value(game: Game, mu: CorrelationPlan, event: Event) -> Fraction:
    """Σ over σ, v of the conditional weight times u_i(v), i the event's player."""
    i = event.player
    total = Fraction(0)
    for sigma, p in mu:
        if not _admits(event, sigma):
            continue
        for v, pc in outcome(game, sigma):
            if _below(game, event, v):
                total += p * pc * game.payoff(v, i)
    return total


def deviation_value(game: Game, mu: CorrelationPlan, event: Event, beta: PartialStrategy) -> Fraction:
    """Σ over σ, v of the conditional weight with σ replaced by σ[β]."""
    i = event.player
    total = Fraction(0)
    for sigma, p in mu:
        if not _admits(event, sigma):
            continue
        for v, pc in outcome(game, apply_deviation(sigma, beta)):
            if _below(game, event, v):
                total += p * pc * game.payoff(v, i)
    return total


# -- best deviation -----------------------------------------------------------------

class TriggerError(ValueError):
    pass


@dataclass(frozen=True)
class BestDeviation:
    value: Fraction
    beta: PartialStrategy


def _others_leaves(game: Game, sigma: StrategyProfile, i: int) -> list[tuple[str, Fraction]]:
    """Leaves consistent with σ_{-i}, player i's choices left open."""
    out = []
    stack = [(game.root, Fraction(1))]
    while stack:
        v, p = stack.pop()
        node = game.nodes[v]
        if node.kind == LEAF:
            out.append((v, p))
        elif node.kind == CHANCE:
            stack.extend((e.child, p * e.prob) for e in node.edges)
        elif node.player == i:
            stack.extend((e.child, p) for e in node.edges)
        else:
            stack.append((node.child(sigma.table[node.infoset]), p))
    return out


def _leaf_weights(game, mu, i, keep: Callable[[StrategyProfile], bool], prefix: History) -> dict[str, Fraction]:
    w: dict[str, Fraction] = defaultdict(Fraction)
    for sigma, p in mu:
        if not keep(sigma):
            continue
        if any(sigma.table[I] != a for I, a in prefix):
            continue
        for v, pc in _others_leaves(game, sigma, i):
            w[v] += p * pc
    return w


def _solve_tree(game: Game, i: int, w: dict[str, Fraction], start: str | None):
    """Best-response recursion over player i's history tree.

    Returns the value at information set ``start`` (or at the empty history when
    ``start`` is None) together with the maximizing choices found on the way.
    """
    leaves_at = game.leaves_at(i)
    infosets_at = game.infosets_at(i)
    choices: dict[str, str] = {}

    def node_value(h: History) -> Fraction:
        total = Fraction(0)
        for v in leaves_at.get(h, ()):
            if v in w:
                total += w[v] * game.payoff(v, i)
        for J in infosets_at.get(h, ()):
            total += infoset_value(J)
        return total

    def infoset_value(J: str) -> Fraction:
        base = game.infoset_history(J)
        best = None
        for a in game.infosets[J].sorted_actions:
            val = node_value(base + ((J, a),))
            if best is None or val > best:
                best, choices[J] = val, a
        return best

    value = node_value(()) if start is None else infoset_value(start)
    return value, PartialStrategy.of(i, choices)


def _check_infoset(game: Game, i: int, I: str) -> None:
    if I not in game.infosets or game.player_of(I) != i:
        raise TriggerError(f"{I!r} is not an information set of player {i}")


def _check_action(game: Game, I: str, a: str) -> None:
    if a not in game.infosets[I].actions:
        raise TriggerError(f"{a!r} is not an action at {I!r}")


def trigger_event(game: Game, concept: Concept, i: int, trigger: tuple) -> Event:
    """The conditioning event for a concept-specific trigger."""
    concept = Concept(concept)
    if concept == Concept.NFCE:
        if len(trigger) != 1 or not isinstance(trigger[0], PartialStrategy) or trigger[0].player != i:
            raise TriggerError("NFCE trigger is (alpha,) with alpha a pure strategy of the player")
        return Recommend(trigger[0])
    if concept == Concept.NFCCE:
        if trigger:
            raise TriggerError("NFCCE trigger is empty")
        return Start(i)
    shapes = {Concept.EFCE: 2, Concept.EFCCE: 1, Concept.AFCE: 3, Concept.AFCCE: 2}
    if concept not in shapes or len(trigger) != shapes[concept]:
        raise TriggerError(f"bad trigger {trigger!r} for {concept.value}")
    I = trigger[0]
    _check_infoset(game, i, I)
    for a in trigger[1:]:
        _check_action(game, I, a)
    if concept in (Concept.EFCE, Concept.AFCE):
        return ReachRecommend(i, I, trigger[1])
    return Reach(i, I)


def best_deviation_value(game: Game, mu: CorrelationPlan, i: int, concept: Concept | str, trigger: tuple = ()) -> BestDeviation:
    """Largest denominator-scaled deviation payoff for one trigger.

    Trigger shapes: EFCE (I, a); EFCCE (I,); NFCCE (); AFCE (I, a, a'); AFCCE
    (I, a'); NFCE (alpha,) where alpha is the recommended pure strategy.
    """
    concept = Concept(concept)
    if not 1 <= i <= game.players:
        raise TriggerError(f"unknown player {i}")
    event = trigger_event(game, concept, i, trigger)
    if concept in (Concept.AFCE, Concept.AFCCE):
        beta = PartialStrategy.of(i, {trigger[0]: trigger[-1]})
        return BestDeviation(deviation_value(game, mu, event, beta), beta)
    if concept == Concept.NFCE:
        alpha = trigger[0].choices
        w = _leaf_weights(game, mu, i, lambda s: s[i].choices == alpha, ())
        return BestDeviation(*_solve_tree(game, i, w, None))
    if concept == Concept.NFCCE:
        w = _leaf_weights(game, mu, i, lambda s: True, ())
        return BestDeviation(*_solve_tree(game, i, w, None))
    I = trigger[0]
    keep = (lambda s: s.get(I) == trigger[1]) if concept == Concept.EFCE else (lambda s: True)
    w = _leaf_weights(game, mu, i, keep, game.infoset_history(I))
    return BestDeviation(*_solve_tree(game, i, w, I))


def deviation_domain(game: Game, concept: Concept, i: int, trigger: tuple) -> tuple[str, ...]:
    """dom(β) for the deviations a trigger admits."""
    concept = Concept(concept)
    if concept in (Concept.NFCE, Concept.NFCCE, Concept.NASH):
        return game.player_infosets[i]
    if concept in (Concept.AFCE, Concept.AFCCE):
        return (trigger[0],)
    return game.below_infosets(trigger[0])


def brute_force_best_deviation(game: Game, mu: CorrelationPlan, i: int, concept: Concept | str,
                               trigger: tuple = (), cap: int = DEFAULT_CAP) -> Fraction:
    """The same maximum as :func:`best_deviation_value`, by enumerating every β."""
    concept = Concept(concept)
    event = trigger_event(game, concept, i, trigger)
    if concept in (Concept.AFCE, Concept.AFCCE):
        return deviation_value(game, mu, event, PartialStrategy.of(i, {trigger[0]: trigger[-1]}))
    domain = deviation_domain(game, concept, i, trigger)
    return max(deviation_value(game, mu, event, beta) for beta in enumerate_partial(game, i, domain, cap))


# -- verification -------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    player: int
    event: Event
    beta: PartialStrategy
    honest: Fraction
    deviation: Fraction

    def to_json(self) -> dict[str, Any]:
        return {
            "player": self.player,
            "event": describe_event(self.event),
            "deviation": dict(self.beta.choices),
            "honest_value": format_rational(self.honest),
            "deviation_value": format_rational(self.deviation),
        }


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: Witness | None = None
    reason: str | None = None

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"ok": self.ok}
        if self.witness is not None:
            doc["witness"] = self.witness.to_json()
        if self.reason is not None:
            doc["reason"] = self.reason
        return doc


def describe_event(event: Event) -> dict[str, Any]:
    if isinstance(event, Start):
        return {"kind": "start"}
    if isinstance(event, Recommend):
        return {"kind": "recommend", "strategy": dict(event.alpha.choices)}
    if isinstance(event, Reach):
        return {"kind": "reach", "infoset": event.infoset}
    return {"kind": "reach-recommend", "infoset": event.infoset, "action": event.action}


def _triggers(game: Game, concept: Concept, i: int, mu: CorrelationPlan):
    """Triggers of one player in deterministic order."""
    if concept == Concept.NFCCE:
        yield ()
        return
    if concept == Concept.NFCE:
        seen = sorted({sigma[i].choices for sigma in mu.support})
        for choices in seen:
            yield (PureStrategy(i, choices),)
        return
    for I in game.player_infosets[i]:
        acts = game.infosets[I].sorted_actions
        if concept == Concept.EFCE:
            for a in acts:
                yield (I, a)
        elif concept == Concept.EFCCE:
            yield (I,)
        elif concept == Concept.AFCE:
            for a in acts:
                for b in acts:
                    if a != b:
                        yield (I, a, b)
        elif concept == Concept.AFCCE:
            for b in acts:
                yield (I, b)


def verify(game: Game, mu: CorrelationPlan, concept: Concept | str, cap: int = DEFAULT_CAP) -> Verdict:
    """Check every incentive constraint of ``concept``; report the first violation.

    For NASH, ``mu`` may also be a behavioral profile.
    """
    concept = Concept(concept)
    if not isinstance(mu, CorrelationPlan):
        if concept != Concept.NASH:
            raise GameError(f"{concept.value} needs a correlation plan")
        from .nash_etr import check_behavioral  # nash_etr imports this module
        return check_behavioral(game, mu)
    check_plan(game, mu)
    if concept == Concept.NASH:
        return _verify_nash(game, mu, cap)
    for i in range(1, game.players + 1):
        for trigger in _triggers(game, concept, i, mu):
            event = trigger_event(game, concept, i, trigger)
            honest = honest_value(game, mu, event)
            best = best_deviation_value(game, mu, i, concept, trigger)
            if best.value > honest:
                return Verdict(False, Witness(i, event, best.beta, honest, best.value))
    return Verdict(True)


def marginals(mu: CorrelationPlan, players: int) -> list[dict[tuple, Fraction]]:
    out: list[dict[tuple, Fraction]] = [defaultdict(Fraction) for _ in range(players)]
    for sigma, p in mu:
        for k, s in enumerate(sigma.strategies):
            out[k][s.choices] += p
    return out


def is_product(mu: CorrelationPlan, players: int) -> bool:
    """Whether μ equals the product of its own marginals."""
    margs = marginals(mu, players)
    size = 1
    for m in margs:
        size *= len(m)
    if size != len(mu):
        return False
    for sigma, p in mu:
        q = Fraction(1)
        for k, s in enumerate(sigma.strategies):
            q *= margs[k][s.choices]
        if q != p:
            return False
    return True


def _verify_nash(game: Game, mu: CorrelationPlan, cap: int) -> Verdict:
    if not is_product(mu, game.players):
        raise GameError("NASH verification needs a product plan (independent strategies)")
    for i in range(1, game.players + 1):
        if count_strategies(game, game.player_infosets[i]) > cap:
            raise ScaleError(f"verification infeasible at this scale: player {i} exceeds the cap {cap}")
        event = Start(i)
        honest = honest_value(game, mu, event)
        for beta in enumerate_pure_strategies(game, i, cap):
            dev = deviation_value(game, mu, event, beta)
            if dev > honest:
                return Verdict(False, Witness(i, event, beta, honest, dev))
    return Verdict(True)
