"""Pure and partial strategies, profiles, deviations and correlation plans."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .game import CHANCE, LEAF, Game, GameError, format_rational, parse_rational

DEFAULT_CAP = 10**7


class ScaleError(RuntimeError):
    """Raised when an enumeration would exceed its configured cap."""


@dataclass(frozen=True)
class PartialStrategy:
    """A map from some of player ``player``'s information sets to actions.

    ``choices`` is kept sorted by information-set id so equality is structural.
    """

    player: int
    choices: tuple[tuple[str, str], ...]

    @staticmethod
    def of(player: int, mapping: Mapping[str, str]) -> "PartialStrategy":
        return PartialStrategy(player, tuple(sorted(mapping.items())))

    @cached_property
    def table(self) -> dict[str, str]:
        return dict(self.choices)

    @property
    def domain(self) -> frozenset[str]:
        return frozenset(self.table)

    def get(self, infoset: str) -> str | None:
        return self.table.get(infoset)

    def __getitem__(self, infoset: str) -> str:
        return self.table[infoset]

    def __str__(self) -> str:
        return "{" + ", ".join(f"{I}->{a}" for I, a in self.choices) + "}"


class PureStrategy(PartialStrategy):
    """A partial strategy whose domain is every information set of its player."""

    @staticmethod
    def of(player: int, mapping: Mapping[str, str]) -> "PureStrategy":
        return PureStrategy(player, tuple(sorted(mapping.items())))


def pure_strategy(game: Game, i: int, mapping: Mapping[str, str]) -> PureStrategy:
    """Validated constructor for a pure strategy of player ``i``."""
    own = set(game.player_infosets.get(i, ()))
    if i < 1 or i > game.players:
        raise GameError(f"unknown player {i}")
    if set(mapping) != own:
        raise GameError(f"strategy of player {i} must cover exactly {sorted(own)}")
    _check_actions(game, mapping)
    return PureStrategy.of(i, mapping)


def partial_strategy(game: Game, i: int, mapping: Mapping[str, str]) -> PartialStrategy:
    own = set(game.player_infosets.get(i, ()))
    if i < 1 or i > game.players:
        raise GameError(f"unknown player {i}")
    if not set(mapping) <= own:
        raise GameError(f"partial strategy of player {i} names foreign information sets")
    _check_actions(game, mapping)
    return PartialStrategy.of(i, mapping)


def _check_actions(game: Game, mapping: Mapping[str, str]) -> None:
    for I, a in mapping.items():
        if a not in game.infosets[I].actions:
            raise GameError(f"action {a!r} is not available at {I!r}")


@dataclass(frozen=True)
class StrategyProfile:
    strategies: tuple[PureStrategy, ...]

    def __post_init__(self) -> None:
        if [s.player for s in self.strategies] != list(range(1, len(self.strategies) + 1)):
            raise GameError("profile must list players 1..n in order")

    @cached_property
    def table(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for s in self.strategies:
            out.update(s.table)
        return out

    def __getitem__(self, i: int) -> PureStrategy:
        return self.strategies[i - 1]

    def get(self, infoset: str) -> str | None:
        return self.table.get(infoset)

    @property
    def key(self) -> tuple:
        return tuple(s.choices for s in self.strategies)

    def __str__(self) -> str:
        return "(" + "; ".join(str(s) for s in self.strategies) + ")"


def profile(game: Game, choices: Mapping[str, str]) -> StrategyProfile:
    """Build a profile from one flat infoset -> action map covering every set."""
    per = {i: {} for i in range(1, game.players + 1)}
    for I, a in choices.items():
        if I not in game.infosets:
            raise GameError(f"unknown information set {I!r}")
        per[game.player_of(I)][I] = a
    return StrategyProfile(tuple(pure_strategy(game, i, per[i]) for i in sorted(per)))


def check_profile(game: Game, sigma: StrategyProfile) -> None:
    if len(sigma.strategies) != game.players:
        raise GameError(f"profile has {len(sigma.strategies)} strategies for {game.players} players")
    for s in sigma.strategies:
        pure_strategy(game, s.player, s.table)


def enumerate_pure_strategies(game: Game, i: int, cap: int = DEFAULT_CAP) -> Iterator[PureStrategy]:
    """Every pure strategy of player ``i`` in lexicographic (infoset, action) order."""
    if not 1 <= i <= game.players:
        raise GameError(f"unknown player {i}")
    return _enumerate(game, i, game.player_infosets[i], cap)


def enumerate_partial(game: Game, i: int, domain: Sequence[str], cap: int = DEFAULT_CAP) -> Iterator[PartialStrategy]:
    """Every partial strategy of player ``i`` with exactly the given domain."""
    return _enumerate(game, i, tuple(sorted(domain)), cap, PartialStrategy)


def count_strategies(game: Game, infosets: Iterable[str]) -> int:
    n = 1
    for I in infosets:
        n *= len(game.infosets[I].actions)
    return n


def _enumerate(game, i, infosets, cap, cls=PureStrategy):
    total = count_strategies(game, infosets)
    if total > cap:
        raise ScaleError(f"player {i} has {total} strategies, above the cap {cap}: oracle infeasible at this scale")
    options = [game.infosets[I].sorted_actions for I in infosets]
    for combo in itertools.product(*options):
        yield cls(i, tuple(zip(infosets, combo)))


def enumerate_profiles(game: Game, cap: int = DEFAULT_CAP) -> list[StrategyProfile]:
    """All of Σ, player 1's strategy varying slowest."""
    total = 1
    for i in range(1, game.players + 1):
        total *= count_strategies(game, game.player_infosets[i])
    if total > cap:
        raise ScaleError(f"|Σ| = {total} exceeds the cap {cap}: oracle infeasible at this scale")
    per = [list(enumerate_pure_strategies(game, i, cap)) for i in range(1, game.players + 1)]
    return [StrategyProfile(combo) for combo in itertools.product(*per)]


def apply_deviation(sigma: StrategyProfile, beta: PartialStrategy) -> StrategyProfile:
    """σ[β]: player β.player follows β on its domain and σ elsewhere."""
    if not 1 <= beta.player <= len(sigma.strategies):
        raise GameError(f"unknown player {beta.player}")
    if not beta.choices:
        return sigma
    old = sigma[beta.player]
    merged = dict(old.table)
    merged.update(beta.table)
    new = PureStrategy.of(beta.player, merged)
    parts = list(sigma.strategies)
    parts[beta.player - 1] = new
    return StrategyProfile(tuple(parts))


def _pairs(game: Game, target: Any) -> Iterable[tuple[str, str]]:
    if isinstance(target, str):
        if target not in game.nodes:
            raise GameError(f"unknown node {target!r}")
        return game.path[target]
    if isinstance(target, tuple):
        if target and all(isinstance(h, tuple) and (not h or isinstance(h[0], tuple)) for h in target):
            return [p for h in target for p in h]
        return target
    raise TypeError(f"cannot test consistency against {type(target).__name__}")


def consistent(game: Game, x: PartialStrategy | StrategyProfile, target: Any) -> bool:
    """The 0/1 consistency indicator.

    ``target`` may be a node id (ind_x(v)), a player history or a tuple of
    per-player histories (ind_x(h)), or a pure strategy (ind_x(α)). Pairs at
    information sets outside the domain of ``x`` never break consistency.
    """
    if isinstance(target, PartialStrategy):
        if not isinstance(x, PartialStrategy) or x.player != target.player:
            raise GameError("strategy comparison needs two strategies of one player")
        return x.choices == target.choices
    table = x.table
    return all(table.get(I, a) == a for I, a in _pairs(game, target))


def recommends(x: PartialStrategy | StrategyProfile, infoset: str, action: str) -> bool:
    """ind^σ(I -> a)."""
    return x.get(infoset) == action


def outcome(game: Game, sigma: StrategyProfile | Mapping[str, str]) -> list[tuple[str, Fraction]]:
    """Leaves reached under ``sigma`` with their chance reach, in preorder."""
    table = sigma.table if isinstance(sigma, StrategyProfile) else sigma
    out: list[tuple[str, Fraction]] = []
    stack: list[tuple[str, Fraction]] = [(game.root, Fraction(1))]
    while stack:
        v, p = stack.pop()
        node = game.nodes[v]
        if node.kind == LEAF:
            out.append((v, p))
        elif node.kind == CHANCE:
            stack.extend((e.child, p * e.prob) for e in reversed(node.edges))
        else:
            stack.append((node.child(table[node.infoset]), p))
    return out


def profile_payoffs(game: Game, sigma: StrategyProfile | Mapping[str, str]) -> tuple[Fraction, ...]:
    total = [Fraction(0)] * game.players
    for v, p in outcome(game, sigma):
        for k, u in enumerate(game.nodes[v].payoff):
            total[k] += p * u
    return tuple(total)


@dataclass(frozen=True)
class CorrelationPlan:
    """A distribution over pure profiles, stored by its support."""

    entries: tuple[tuple[StrategyProfile, Fraction], ...]

    def __post_init__(self) -> None:
        keys = [s.key for s, _ in self.entries]
        if len(set(keys)) != len(keys):
            raise GameError("plan repeats a profile")
        if any(p <= 0 for _, p in self.entries):
            raise GameError("plan probabilities must be positive")
        if sum((p for _, p in self.entries), Fraction(0)) != 1:
            raise GameError("plan probabilities must sum to 1")

    @staticmethod
    def of(items: Iterable[tuple[StrategyProfile, Fraction]]) -> "CorrelationPlan":
        return CorrelationPlan(tuple(sorted(((s, Fraction(p)) for s, p in items), key=lambda e: e[0].key)))

    @staticmethod
    def dirac(sigma: StrategyProfile) -> "CorrelationPlan":
        return CorrelationPlan(((sigma, Fraction(1)),))

    @staticmethod
    def uniform(profiles: Sequence[StrategyProfile]) -> "CorrelationPlan":
        w = Fraction(1, len(profiles))
        return CorrelationPlan.of((s, w) for s in profiles)

    @property
    def support(self) -> tuple[StrategyProfile, ...]:
        return tuple(s for s, _ in self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def prob(self, sigma: StrategyProfile) -> Fraction:
        for s, p in self.entries:
            if s.key == sigma.key:
                return p
        return Fraction(0)


def check_plan(game: Game, mu: CorrelationPlan) -> None:
    for sigma, _ in mu:
        check_profile(game, sigma)


def expected_payoffs(game: Game, mu: CorrelationPlan) -> tuple[tuple[Fraction, ...], Fraction]:
    """(E_μ[U_1..U_n], E_μ[ω]) computed exactly."""
    check_plan(game, mu)
    total = [Fraction(0)] * game.players
    for sigma, w in mu:
        for k, u in enumerate(profile_payoffs(game, sigma)):
            total[k] += w * u
    value = sum((c * u for c, u in zip(game.objective, total)), Fraction(0))
    return tuple(total), value


def leaf_distribution(game: Game, mu: CorrelationPlan) -> dict[str, Fraction]:
    dist = {v: Fraction(0) for v in game.leaves}
    for sigma, w in mu:
        for v, p in outcome(game, sigma):
            dist[v] += w * p
    return dist


# -- JSON --------------------------------------------------------------------

def profile_to_json(sigma: StrategyProfile) -> dict[str, dict[str, str]]:
    return {str(s.player): dict(s.choices) for s in sigma.strategies}


def profile_from_json(game: Game, doc: Mapping[str, Any]) -> StrategyProfile:
    try:
        per = {int(k): dict(v) for k, v in doc.items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise GameError(f"malformed profile: {exc!r}") from exc
    strategies = []
    for i in range(1, game.players + 1):
        strategies.append(pure_strategy(game, i, {str(I): str(a) for I, a in per.get(i, {}).items()}))
    if set(per) - set(range(1, game.players + 1)):
        raise GameError("profile names unknown players")
    return StrategyProfile(tuple(strategies))


def plan_to_json(mu: CorrelationPlan) -> dict[str, Any]:
    return {"plan": [{"prob": format_rational(p), "profile": profile_to_json(s)} for s, p in mu]}


def parse_plan(game: Game, data: bytes | str | Mapping[str, Any]) -> CorrelationPlan:
    if isinstance(data, (bytes, str)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise GameError(f"malformed JSON: {exc}") from exc
    else:
        doc = data
    try:
        items = [(profile_from_json(game, e["profile"]), parse_rational(e["prob"])) for e in doc["plan"]]
    except (KeyError, TypeError) as exc:
        raise GameError(f"malformed plan document: {exc!r}") from exc
    return CorrelationPlan.of(items)
