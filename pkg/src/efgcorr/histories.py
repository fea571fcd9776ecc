"""Honest and deviation history families used by the linear systems.

A relevant history is a tuple (h_1, ..., h_n) of player histories. Honest ones
are the leaf histories h(v); deviation ones replace a single coordinate i by a
concept-specific prefix describing what a deviator was recommended.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .game import EMPTY, Game, GameError, History
from .verify import Concept

Joint = tuple[History, ...]

FAMILY_CONCEPTS = (Concept.EFCE, Concept.EFCCE, Concept.NFCCE, Concept.AFCE, Concept.AFCCE)


class UnsupportedConcept(GameError):
    pass


@dataclass(frozen=True)
class RelevantHistory:
    histories: Joint
    kind: str  # "honest" or "deviation"
    leaf: str
    player: int | None = None
    infoset: str | None = None
    action: str | None = None


def _require_family(concept: Concept) -> Concept:
    concept = Concept(concept)
    if concept == Concept.NFCE:
        raise UnsupportedConcept(
            "NFCE has no polynomial relevant-history family; deciding its threshold problem is PSPACE-hard"
        )
    if concept not in FAMILY_CONCEPTS:
        raise UnsupportedConcept(f"no relevant-history family for {concept.value}")
    return concept


def honest_histories(game: Game) -> list[RelevantHistory]:
    return [RelevantHistory(game.histories[v], "honest", v) for v in game.leaves]


def replace(joint: Joint, i: int, h: History) -> Joint:
    return joint[: i - 1] + (h,) + joint[i:]


def deviation_history(game: Game, concept: Concept, v: str, player: int,
                      infoset: str | None = None, action: str | None = None) -> Joint:
    """The deviation history of leaf ``v`` for one trigger of ``player``.

    ``v`` must lie below ``infoset``; ``action`` is the recommended action
    (EFCE, AFCE) and is ignored by the coarse concepts. NFCCE takes no infoset.
    """
    concept = _require_family(concept)
    joint = game.histories[v]
    if concept == Concept.NFCCE:
        return replace(joint, player, EMPTY)
    I = infoset
    hv = joint[player - 1]
    base = game.infoset_history(I)
    k = len(base)
    if hv[:k] != base or len(hv) <= k or hv[k][0] != I:
        raise GameError(f"leaf {v!r} is not below {I!r}")
    rest = hv[k + 1:]
    if concept == Concept.EFCE:
        h = base + ((I, action),)
    elif concept == Concept.AFCE:
        h = base + ((I, action),) + rest
    elif concept == Concept.EFCCE:
        h = base
    else:
        h = base + rest
    return replace(joint, player, h)


def deviation_histories(game: Game, concept: Concept | str) -> list[RelevantHistory]:
    """The concept's deviation family, duplicates collapsed, in deterministic order."""
    concept = _require_family(concept)
    out: list[RelevantHistory] = []
    seen: set[Joint] = set()

    def add(h: Joint, **kw) -> None:
        if h not in seen:
            seen.add(h)
            out.append(RelevantHistory(h, "deviation", **kw))

    for i in range(1, game.players + 1):
        if concept == Concept.NFCCE:
            for v in game.leaves:
                add(replace(game.histories[v], i, EMPTY), leaf=v, player=i)
            continue
        for I in game.player_infosets[i]:
            actions = game.infosets[I].sorted_actions if concept in (Concept.EFCE, Concept.AFCE) else (None,)
            for a in actions:
                for v in game.leaves_below(I):
                    add(deviation_history(game, concept, v, i, I, a), leaf=v, player=i, infoset=I, action=a)
    return out


@dataclass(frozen=True)
class RelevantSet:
    concept: Concept
    histories: tuple[RelevantHistory, ...]
    honest: int
    deviation: int
    bound: int

    def __len__(self) -> int:
        return len(self.histories)

    @property
    def joints(self) -> tuple[Joint, ...]:
        return tuple(r.histories for r in self.histories)


def size_bound(game: Game, concept: Concept) -> int:
    """Polynomial ceiling on |RH ∪ RD| for the concept."""
    n, n_i, n_l, a = game.players, len(game.infosets), len(game.leaves), game.max_actions
    if concept in (Concept.EFCE, Concept.AFCE):
        return n * n_i * n_l * a + n_l
    if concept in (Concept.EFCCE, Concept.AFCCE):
        return n * n_i * n_l + n_l
    return n * n_l + n_l


def relevant_set(game: Game, concept: Concept | str) -> RelevantSet:
    concept = _require_family(concept)
    honest = honest_histories(game)
    merged: dict[Joint, RelevantHistory] = {}
    for r in honest:
        merged.setdefault(r.histories, r)
    for r in deviation_histories(game, concept):
        merged.setdefault(r.histories, r)
    items = tuple(merged.values())
    n_honest = sum(1 for r in items if r.kind == "honest")
    bound = size_bound(game, concept)
    if len(items) > bound:
        raise AssertionError(f"|R| = {len(items)} exceeds the bound {bound} for {concept.value}")
    return RelevantSet(concept, items, n_honest, len(items) - n_honest, bound)


def player_history_set(game: Game, i: int) -> list[History]:
    """Every history player i can have: ε and h_i(I)·(I,a) for all I, a."""
    out = [EMPTY]
    for I in game.player_infosets[i]:
        base = game.infoset_history(I)
        out.extend(base + ((I, a),) for a in game.infosets[I].sorted_actions)
    return out


def pairwise_relevant_count(game: Game) -> int:
    """Number of tuples (h_1..h_n) whose coordinates are pairwise relevant.

    (h_i, h_j) is relevant when either is empty or some root path meets the
    last information sets of both. Exponential; only for small games.
    """
    on_path: set[frozenset[str]] = set()
    for v in game.order:
        node = game.nodes[v]
        here = {I for I, _ in game.path[v]}
        if node.infoset is not None:
            here.add(node.infoset)
        for I, J in itertools.combinations(sorted(here), 2):
            on_path.add(frozenset((I, J)))

    def related(h: History, g: History) -> bool:
        return not h or not g or frozenset((h[-1][0], g[-1][0])) in on_path

    sets = [player_history_set(game, i) for i in range(1, game.players + 1)]
    count = 0
    for combo in itertools.product(*sets):
        if all(related(combo[p], combo[q]) for p, q in itertools.combinations(range(len(combo)), 2)):
            count += 1
    return count
