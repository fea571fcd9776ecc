"""Small reference games and a random perfect-recall game generator."""
from __future__ import annotations

import random
from fractions import Fraction as F

from .game import CHANCE, LEAF, PLAYER, Edge, Game, InfoSet, Node, make_game
from .strategy import CorrelationPlan, StrategyProfile, profile


def _leaf(id: str, *payoff) -> Node:
    return Node(id, LEAF, payoff=tuple(F(p) for p in payoff))


def _move(id: str, player: int, infoset: str, **children: str) -> Node:
    return Node(id, PLAYER, tuple(Edge(c, action=a) for a, c in children.items()), player, infoset)


def _chance(id: str, *pairs: tuple[F, str]) -> Node:
    return Node(id, CHANCE, tuple(Edge(c, prob=F(p)) for p, c in pairs))


def signaling_game() -> Game:
    """Job-market signaling: chance picks a strong or weak applicant, who sends an
    eager or generic letter; the company sees only the letter and accepts or rejects."""
    nodes = [
        _chance("root", (F(1, 2), "S"), (F(1, 2), "W")),
        _move("S", 1, "I_S", E_S="N1", G_S="N2"),
        _move("W", 1, "I_W", E_W="N3", G_W="N4"),
        _move("N1", 2, "I_E", A_E="S_E_A", R_E="S_E_R"),
        _move("N2", 2, "I_G", A_G="S_G_A", R_G="S_G_R"),
        _move("N3", 2, "I_E", A_E="W_E_A", R_E="W_E_R"),
        _move("N4", 2, "I_G", A_G="W_G_A", R_G="W_G_R"),
        _leaf("S_E_A", 4, 10), _leaf("S_E_R", 0, 6),
        _leaf("S_G_A", 4, 10), _leaf("S_G_R", 0, 6),
        _leaf("W_E_A", 6, 0), _leaf("W_E_R", 0, 6),
        _leaf("W_G_A", 6, 0), _leaf("W_G_R", 0, 6),
    ]
    infosets = [
        InfoSet("I_S", 1, ("E_S", "G_S")),
        InfoSet("I_W", 1, ("E_W", "G_W")),
        InfoSet("I_E", 2, ("A_E", "R_E")),
        InfoSet("I_G", 2, ("A_G", "R_G")),
    ]
    return make_game(2, infosets, nodes, "root")


def signaling_profile(game: Game, s: str, w: str, e: str, g: str) -> StrategyProfile:
    return profile(game, {"I_S": s, "I_W": w, "I_E": e, "I_G": g})


def signaling_plan(game: Game) -> CorrelationPlan:
    """Uniform over the four profiles that reach welfare 10."""
    return CorrelationPlan.uniform([
        signaling_profile(game, "E_S", "E_W", "A_E", "R_G"),
        signaling_profile(game, "G_S", "E_W", "R_E", "A_G"),
        signaling_profile(game, "E_S", "G_W", "A_E", "R_G"),
        signaling_profile(game, "G_S", "G_W", "R_E", "A_G"),
    ])


def signaling_reject(game: Game) -> StrategyProfile:
    return signaling_profile(game, "G_S", "G_W", "R_E", "R_G")


def signaling_without_chance() -> Game:
    """The signaling tree with the root handed to the company: breaks perfect recall."""
    nodes = [
        _move("N0", 2, "I_0", a="S", b="W"),
        _move("S", 1, "I_S", E_S="N1", G_S="N2"),
        _move("W", 1, "I_W", E_W="N3", G_W="N4"),
        _move("N1", 2, "I_E", A_E="S_E_A", R_E="S_E_R"),
        _move("N2", 2, "I_G", A_G="S_G_A", R_G="S_G_R"),
        _move("N3", 2, "I_E", A_E="W_E_A", R_E="W_E_R"),
        _move("N4", 2, "I_G", A_G="W_G_A", R_G="W_G_R"),
        _leaf("S_E_A", 4, 10), _leaf("S_E_R", 0, 6),
        _leaf("S_G_A", 4, 10), _leaf("S_G_R", 0, 6),
        _leaf("W_E_A", 6, 0), _leaf("W_E_R", 0, 6),
        _leaf("W_G_A", 6, 0), _leaf("W_G_R", 0, 6),
    ]
    infosets = [
        InfoSet("I_0", 2, ("a", "b")),
        InfoSet("I_S", 1, ("E_S", "G_S")),
        InfoSet("I_W", 1, ("E_W", "G_W")),
        InfoSet("I_E", 2, ("A_E", "R_E")),
        InfoSet("I_G", 2, ("A_G", "R_G")),
    ]
    return make_game(2, infosets, nodes, "N0")


THREE_PLAYER_LEAVES = ("l1", "l2", "l3", "l4", "l5", "r1", "r2", "r3", "r4", "r5")


def three_player_game(payoffs: dict[str, tuple] | None = None) -> Game:
    """Three-player tree with information sets I1 = {L1, R1}, I2 = {L2, R2},
    I4 = {L4, R4} and player-1 singletons L3, R3, behind a 1/3 : 2/3 chance root."""
    if payoffs is None:
        payoffs = {v: (k + 1, -k, 2 * k % 5) for k, v in enumerate(THREE_PLAYER_LEAVES)}
    nodes = [
        _chance("root", (F(1, 3), "L1"), (F(2, 3), "R1")),
        _move("L1", 1, "I1", a="L2", abar="l5"),
        _move("L2", 2, "I2", b="L3", bbar="l4"),
        _move("L3", 1, "L3", c="L4", cbar="l3"),
        _move("L4", 3, "I4", e="l1", ebar="l2"),
        _move("R1", 1, "I1", a="r5", abar="R2"),
        _move("R2", 2, "I2", b="r4", bbar="R3"),
        _move("R3", 1, "R3", d="r3", dbar="R4"),
        _move("R4", 3, "I4", e="r2", ebar="r1"),
    ] + [_leaf(v, *payoffs[v]) for v in THREE_PLAYER_LEAVES]
    infosets = [
        InfoSet("I1", 1, ("a", "abar")),
        InfoSet("L3", 1, ("c", "cbar")),
        InfoSet("R3", 1, ("d", "dbar")),
        InfoSet("I2", 2, ("b", "bbar")),
        InfoSet("I4", 3, ("e", "ebar")),
    ]
    return make_game(3, infosets, nodes, "root")


def chain_game(n: int) -> Game:
    """n players in sequence; player k either continues or stops at leaf p_k."""
    nodes = []
    for k in range(1, n + 1):
        nxt = f"v{k + 1}" if k < n else "end"
        nodes.append(_move(f"v{k}", k, f"J{k}", a=nxt, b=f"p{k}"))
        nodes.append(_leaf(f"p{k}", *[1 if j == k else 0 for j in range(1, n + 1)]))
    nodes.append(_leaf("end", *[1] * n))
    infosets = [InfoSet(f"J{k}", k, ("a", "b")) for k in range(1, n + 1)]
    return make_game(n, infosets, nodes, "v1")


def single_leaf_game(payoff: int = 0) -> Game:
    return make_game(1, [], [_leaf("v", payoff)], "v")


_PROBS = [
    (F(1, 2), F(1, 2)),
    (F(1, 3), F(2, 3)),
    (F(1, 4), F(3, 4)),
    (F(1, 3), F(1, 3), F(1, 3)),
    (F(1, 2), F(1, 4), F(1, 4)),
]


def random_game(
    rng: random.Random,
    players: int = 2,
    max_nodes: int = 15,
    max_actions: int = 2,
    chance_rate: float = 0.15,
    merge_rate: float = 0.6,
    payoff_range: tuple[int, int] = (-3, 5),
) -> Game:
    """A random game with perfect recall and at most ``max_nodes`` nodes.

    Player nodes join an existing information set with the same owner history
    and action count with probability ``merge_rate``.
    """
    counter = iter(range(10**9))
    nodes: dict[str, Node] = {}
    budget = [max_nodes - 1]
    shape: dict[str, tuple] = {}
    children: dict[str, list[str]] = {}
    order: list[str] = []

    def grow(depth: int) -> str:
        v = f"n{next(counter)}"
        order.append(v)
        width = rng.randint(2, max(2, max_actions))
        if budget[0] < width or (depth > 0 and rng.random() < 0.25):
            shape[v] = ("leaf",)
            return v
        budget[0] -= width
        if rng.random() < chance_rate:
            probs = rng.choice([p for p in _PROBS if len(p) == width] or [_PROBS[0]])
            width = len(probs)
            shape[v] = ("chance", probs)
        else:
            shape[v] = ("player", rng.randint(1, players))
        children[v] = [grow(depth + 1) for _ in range(width)]
        return v

    root = grow(0)

    labels = "abcdefgh"
    hist: dict[str, tuple] = {root: tuple(() for _ in range(players))}
    infosets: dict[str, InfoSet] = {}
    by_key: dict[tuple, list[str]] = {}
    for v in order:
        kind = shape[v]
        if kind[0] == "leaf":
            nodes[v] = Node(v, LEAF, payoff=tuple(F(rng.randint(*payoff_range)) for _ in range(players)))
            continue
        if kind[0] == "chance":
            nodes[v] = Node(v, CHANCE, tuple(Edge(c, prob=p) for p, c in zip(kind[1], children[v])))
            for c in children[v]:
                hist[c] = hist[v]
            continue
        i = kind[1]
        width = len(children[v])
        key = (i, hist[v][i - 1], width)
        pool = by_key.setdefault(key, [])
        # Two nodes on one root path can never share a history, so any pooled set is safe.
        if pool and rng.random() < merge_rate:
            I = rng.choice(pool)
        else:
            I = f"P{i}_{len(infosets)}"
            infosets[I] = InfoSet(I, i, tuple(f"{labels[k]}{len(infosets)}" for k in range(width)))
            pool.append(I)
        acts = infosets[I].actions
        nodes[v] = Node(v, PLAYER, tuple(Edge(c, action=a) for a, c in zip(acts, children[v])), i, I)
        for a, c in zip(acts, children[v]):
            h = list(hist[v])
            h[i - 1] = h[i - 1] + ((I, a),)
            hist[c] = tuple(h)
    return make_game(players, list(infosets.values()), list(nodes.values()), root)
