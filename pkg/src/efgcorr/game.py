"""Extensive-form games with perfect recall.

A game is a rooted tree of chance, player and leaf nodes. Player nodes are
grouped into information sets; every node of an information set has the same
owner-player history, which is what makes strategies well defined on sets.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Mapping

History = tuple[tuple[str, str], ...]
"""A player history: the (information set, action) pairs one player met."""

EMPTY: History = ()

CHANCE, PLAYER, LEAF = "chance", "player", "leaf"


class GameError(ValueError):
    """Raised for malformed or invalid game documents."""


def parse_rational(value: Any) -> Fraction:
    """Read a rational from an int or a ``"p/q"`` / integer string."""
    if isinstance(value, bool):
        raise GameError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise GameError(f"not a rational: {value!r}") from exc
    raise GameError(f"not a rational (floats are rejected): {value!r}")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Edge:
    child: str
    action: str | None = None
    prob: Fraction | None = None


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    edges: tuple[Edge, ...] = ()
    player: int | None = None
    infoset: str | None = None
    payoff: tuple[Fraction, ...] | None = None

    def child(self, action: str) -> str:
        for e in self.edges:
            if e.action == action:
                return e.child
        raise KeyError(f"node {self.id} has no action {action!r}")


@dataclass(frozen=True)
class InfoSet:
    id: str
    player: int
    actions: tuple[str, ...]

    @property
    def sorted_actions(self) -> tuple[str, ...]:
        return tuple(sorted(self.actions))


@dataclass(frozen=True, eq=False)
class Game:
    """An immutable, validated game. Build it with :func:`make_game` or :func:`parse_game`."""

    players: int
    objective: tuple[Fraction, ...]
    infosets: Mapping[str, InfoSet]
    nodes: Mapping[str, Node]
    root: str
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- structure -----------------------------------------------------

    @cached_property
    def order(self) -> tuple[str, ...]:
        """Node ids in depth-first preorder, children in edge order."""
        out: list[str] = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(e.child for e in reversed(self.nodes[v].edges))
        return tuple(out)

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        return tuple(v for v in self.order if self.nodes[v].kind == LEAF)

    @cached_property
    def parent(self) -> dict[str, tuple[str, Edge]]:
        return {e.child: (v, e) for v in self.order for e in self.nodes[v].edges}

    @cached_property
    def reach(self) -> dict[str, Fraction]:
        """Chance reach P_C for every node."""
        out = {self.root: Fraction(1)}
        for v in self.order:
            node = self.nodes[v]
            for e in node.edges:
                out[e.child] = out[v] * e.prob if node.kind == CHANCE else out[v]
        return out

    @cached_property
    def path(self) -> dict[str, History]:
        """All (information set, action) pairs on the root path, every player, in order."""
        out: dict[str, History] = {self.root: EMPTY}
        for v in self.order:
            node = self.nodes[v]
            for e in node.edges:
                out[e.child] = out[v] + ((node.infoset, e.action),) if node.kind == PLAYER else out[v]
        return out

    @cached_property
    def histories(self) -> dict[str, tuple[History, ...]]:
        """Per node, the tuple (h_1(v), ..., h_n(v))."""
        out = {}
        for v, pairs in self.path.items():
            per: list[list[tuple[str, str]]] = [[] for _ in range(self.players)]
            for infoset, action in pairs:
                per[self.infosets[infoset].player - 1].append((infoset, action))
            out[v] = tuple(tuple(h) for h in per)
        return out

    @cached_property
    def members(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = defaultdict(list)
        for v in self.order:
            if self.nodes[v].kind == PLAYER:
                out[self.nodes[v].infoset].append(v)
        return {k: tuple(vs) for k, vs in out.items()}

    @cached_property
    def player_infosets(self) -> dict[int, tuple[str, ...]]:
        """Information sets of each player, sorted by id."""
        out: dict[int, list[str]] = {i: [] for i in range(1, self.players + 1)}
        for I in sorted(self.infosets):
            out[self.infosets[I].player].append(I)
        return {i: tuple(v) for i, v in out.items()}

    def player_of(self, infoset: str) -> int:
        return self.infosets[infoset].player

    def history(self, v: str, i: int) -> History:
        """h_i(v)."""
        self._check_player(i)
        if v not in self.nodes:
            raise GameError(f"unknown node {v!r}")
        return self.histories[v][i - 1]

    def infoset_history(self, infoset: str) -> History:
        """h_i(I) for the owner i of ``infoset``."""
        v = self.members[infoset][0]
        return self.histories[v][self.infosets[infoset].player - 1]

    def chance_reach(self, v: str) -> Fraction:
        if v not in self.nodes:
            raise GameError(f"unknown node {v!r}")
        return self.reach[v]

    def passes(self, infoset: str, v: str) -> bool:
        """ind_I(v): the root path to ``v`` meets a node of ``infoset`` (``v`` itself included)."""
        node = self.nodes[v]
        if node.kind == PLAYER and node.infoset == infoset:
            return True
        return any(I == infoset for I, _ in self.path[v])

    def action_at(self, infoset: str, v: str) -> str | None:
        """The action taken at ``infoset`` on the root path to ``v``, if any."""
        for I, a in self.path[v]:
            if I == infoset:
                return a
        return None

    def payoff(self, v: str, i: int) -> Fraction:
        return self.nodes[v].payoff[i - 1]

    def welfare(self, v: str) -> Fraction:
        """ω(u(v)) for a leaf."""
        return sum((w * p for w, p in zip(self.objective, self.nodes[v].payoff)), Fraction(0))

    def leaves_below(self, infoset: str) -> tuple[str, ...]:
        key = ("below", infoset)
        if key not in self._cache:
            self._cache[key] = tuple(v for v in self.leaves if self.passes(infoset, v))
        return self._cache[key]

    # Per-player history indices used by the best-deviation recursions.

    def leaves_at(self, i: int) -> dict[History, tuple[str, ...]]:
        """Leaves grouped by h_i(v)."""
        key = ("leaves_at", i)
        if key not in self._cache:
            out: dict[History, list[str]] = defaultdict(list)
            for v in self.leaves:
                out[self.histories[v][i - 1]].append(v)
            self._cache[key] = {h: tuple(vs) for h, vs in out.items()}
        return self._cache[key]

    def infosets_at(self, i: int) -> dict[History, tuple[str, ...]]:
        """Information sets of player i grouped by h_i(J)."""
        key = ("infosets_at", i)
        if key not in self._cache:
            out: dict[History, list[str]] = defaultdict(list)
            for J in self.player_infosets[i]:
                out[self.infoset_history(J)].append(J)
            self._cache[key] = {h: tuple(vs) for h, vs in out.items()}
        return self._cache[key]

    def below_infosets(self, infoset: str) -> tuple[str, ...]:
        """{J : I ⪯ J} for the owner of ``infoset``, sorted by id (I included)."""
        key = ("below_infosets", infoset)
        if key not in self._cache:
            i = self.player_of(infoset)
            self._cache[key] = tuple(
                J for J in self.player_infosets[i]
                if J == infoset or any(K == infoset for K, _ in self.infoset_history(J))
            )
        return self._cache[key]

    @property
    def max_actions(self) -> int:
        return max((len(I.actions) for I in self.infosets.values()), default=1)

    def _check_player(self, i: int) -> None:
        if not 1 <= i <= self.players:
            raise GameError(f"unknown player {i}")

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        nodes = []
        for v in self.order:
            node = self.nodes[v]
            doc: dict[str, Any] = {"id": v, "kind": node.kind}
            if node.kind == PLAYER:
                doc["player"] = node.player
                doc["infoset"] = node.infoset
            if node.kind == LEAF:
                doc["payoff"] = [format_rational(p) for p in node.payoff]
            if node.edges:
                doc["edges"] = [
                    {"prob": format_rational(e.prob), "child": e.child} if node.kind == CHANCE
                    else {"action": e.action, "child": e.child}
                    for e in node.edges
                ]
            nodes.append(doc)
        return {
            "players": self.players,
            "objective": [format_rational(w) for w in self.objective],
            "infosets": [
                {"id": I.id, "player": I.player, "actions": list(I.actions)}
                for I in (self.infosets[k] for k in sorted(self.infosets))
            ],
            "nodes": nodes,
            "root": self.root,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def make_game(
    players: int,
    infosets: Iterable[InfoSet],
    nodes: Iterable[Node],
    root: str,
    objective: Iterable[Fraction] | None = None,
) -> Game:
    """Assemble and validate a game."""
    if not isinstance(players, int) or players < 1:
        raise GameError("players must be an integer >= 1")
    info: dict[str, InfoSet] = {}
    for I in infosets:
        if I.id in info:
            raise GameError(f"duplicate information set {I.id!r}")
        info[I.id] = I
    table: dict[str, Node] = {}
    for node in nodes:
        if node.id in table:
            raise GameError(f"duplicate node {node.id!r}")
        table[node.id] = node
    obj = tuple(objective) if objective is not None else (Fraction(1),) * players
    if len(obj) != players:
        raise GameError(f"objective has {len(obj)} weights for {players} players")
    game = Game(players, obj, info, table, root)
    _validate(game)
    return game


def _validate(game: Game) -> None:
    n = game.players
    if game.root not in game.nodes:
        raise GameError(f"root {game.root!r} is not a node")
    for I in game.infosets.values():
        if not 1 <= I.player <= n:
            raise GameError(f"information set {I.id!r} has invalid player {I.player}")
        if not I.actions or len(set(I.actions)) != len(I.actions):
            raise GameError(f"information set {I.id!r} needs distinct actions")

    seen_child: dict[str, str] = {}
    for node in game.nodes.values():
        if node.kind not in (CHANCE, PLAYER, LEAF):
            raise GameError(f"node {node.id!r} has unknown kind {node.kind!r}")
        for e in node.edges:
            if e.child not in game.nodes:
                raise GameError(f"node {node.id!r} points to unknown node {e.child!r}")
            if e.child in seen_child:
                raise GameError(f"node {e.child!r} has two parents")
            if e.child == game.root:
                raise GameError("the root cannot be a child")
            seen_child[e.child] = node.id
        if node.kind == LEAF:
            if node.edges:
                raise GameError(f"leaf {node.id!r} has edges")
            if node.payoff is None or len(node.payoff) != n:
                raise GameError(f"leaf {node.id!r} needs a payoff of length {n}")
        elif not node.edges:
            raise GameError(f"non-leaf {node.id!r} has no children")
        if node.kind == CHANCE:
            if any(e.prob is None or e.action is not None for e in node.edges):
                raise GameError(f"chance node {node.id!r} edges must carry probabilities only")
            if any(e.prob <= 0 for e in node.edges):
                raise GameError(f"chance node {node.id!r} has a non-positive probability")
            if sum(e.prob for e in node.edges) != 1:
                raise GameError(f"chance node {node.id!r} probabilities do not sum to 1")
        if node.kind == PLAYER:
            if node.infoset not in game.infosets:
                raise GameError(f"node {node.id!r} has unknown information set {node.infoset!r}")
            I = game.infosets[node.infoset]
            if node.player != I.player:
                raise GameError(f"node {node.id!r} player differs from its information set owner")
            labels = [e.action for e in node.edges]
            if any(e.prob is not None for e in node.edges) or None in labels:
                raise GameError(f"player node {node.id!r} edges must carry action labels only")
            if len(set(labels)) != len(labels):
                raise GameError(f"player node {node.id!r} repeats an action label")
            if set(labels) != set(I.actions):
                raise GameError(f"node {node.id!r} actions differ from information set {I.id!r}")

    if len(game.order) != len(game.nodes):
        raise GameError("some nodes are not reachable from the root")

    for I in game.infosets:
        if I not in game.members:
            raise GameError(f"information set {I!r} has no nodes")
    for I, vs in game.members.items():
        i = game.infosets[I].player
        h0 = game.histories[vs[0]][i - 1]
        for v in vs[1:]:
            h = game.histories[v][i - 1]
            if h != h0:
                raise GameError(
                    f"perfect recall violated at information set {I!r}: "
                    f"{vs[0]} has history {format_history(h0)} but {v} has {format_history(h)}"
                )


def format_history(h: History) -> str:
    return "ε" if not h else "·".join(f"({I},{a})" for I, a in h)


def parse_game(data: bytes | str | Mapping[str, Any]) -> Game:
    """Parse a game document (JSON text or an already decoded mapping)."""
    if isinstance(data, (bytes, str)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise GameError(f"malformed JSON: {exc}") from exc
    else:
        doc = data
    try:
        players = doc["players"]
        objective = doc.get("objective")
        infosets = [
            InfoSet(str(d["id"]), int(d["player"]), tuple(str(a) for a in d["actions"]))
            for d in doc.get("infosets", [])
        ]
        by_id = {I.id: I for I in infosets}
        nodes = []
        for d in doc["nodes"]:
            kind = d["kind"]
            edges = []
            for e in d.get("edges", []):
                if "prob" in e:
                    edges.append(Edge(str(e["child"]), prob=parse_rational(e["prob"])))
                else:
                    edges.append(Edge(str(e["child"]), action=str(e["action"])))
            infoset = d.get("infoset")
            player = d.get("player")
            if kind == PLAYER and player is None and infoset in by_id:
                player = by_id[infoset].player
            payoff = d.get("payoff")
            nodes.append(Node(
                id=str(d["id"]),
                kind=kind,
                edges=tuple(edges),
                player=None if player is None else int(player),
                infoset=None if infoset is None else str(infoset),
                payoff=None if payoff is None else tuple(parse_rational(p) for p in payoff),
            ))
        root = str(doc["root"])
    except (KeyError, TypeError, AttributeError) as exc:
        raise GameError(f"malformed game document: {exc!r}") from exc
    obj = None if objective is None else [parse_rational(w) for w in objective]
    return make_game(players, infosets, nodes, root, obj)


class ReachOrder:
    """The order ⪯ on one player's information sets plus a virtual root.

    ``ReachOrder.ROOT`` stands for the virtual root, which precedes every set.
    """

    ROOT = None

    def __init__(self, game: Game, i: int) -> None:
        game._check_player(i)
        self.player = i
        self.infosets = game.player_infosets[i]
        mine = set(self.infosets)
        # Walk the tree once, tracking which of this player's sets lie above.
        above: dict[str, frozenset[str]] = {game.root: frozenset()}
        pairs: set[tuple[str, str]] = set()
        for v in game.order:
            node = game.nodes[v]
            here = above[v]
            if node.kind == PLAYER and node.infoset in mine:
                pairs.update((I, node.infoset) for I in here)
                pairs.add((node.infoset, node.infoset))
                here = here | {node.infoset}
            for e in node.edges:
                above[e.child] = here
        self._pairs = frozenset(pairs)

    def leq(self, I: str | None, J: str | None) -> bool:
        if I is self.ROOT:
            return True
        if J is self.ROOT:
            return False
        return (I, J) in self._pairs

    def successors(self, I: str | None) -> tuple[str, ...]:
        return tuple(J for J in self.infosets if self.leq(I, J))


def infoset_reach_order(game: Game, i: int) -> ReachOrder:
    return ReachOrder(game, i)
