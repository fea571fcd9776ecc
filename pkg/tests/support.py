"""Shared generators and independent reference computations for the tests."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from efgcorr.fixtures import random_game
from efgcorr.game import CHANCE, LEAF, Game
from efgcorr.reductions import CnfFormula
from efgcorr.strategy import CorrelationPlan, count_strategies, enumerate_profiles


def sigma_size(game: Game) -> int:
    total = 1
    for i in range(1, game.players + 1):
        total *= count_strategies(game, game.player_infosets[i])
    return total


def small_games(seed: int, count: int, max_sigma: int = 2000, max_nodes: int = 25, players=(2, 3)):
    """``count`` random games with at most ``max_sigma`` pure profiles."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        g = random_game(rng, players=rng.choice(players), max_nodes=rng.randint(5, max_nodes),
                        max_actions=rng.choice((2, 2, 3)))
        if sigma_size(g) <= max_sigma and g.infosets:
            out.append(g)
    return out


def random_plan(rng: random.Random, game: Game, max_support: int = 4) -> CorrelationPlan:
    profiles = enumerate_profiles(game)
    chosen = rng.sample(profiles, min(len(profiles), rng.randint(1, max_support)))
    weights = [rng.randint(1, 5) for _ in chosen]
    total = sum(weights)
    return CorrelationPlan.of((s, Fraction(w, total)) for s, w in zip(chosen, weights))


def walk_payoffs(game: Game, choice: dict[str, str]) -> tuple[Fraction, ...]:
    """Expected payoffs of a pure profile by a plain recursive tree walk."""
    def go(v: str) -> list[Fraction]:
        node = game.nodes[v]
        if node.kind == LEAF:
            return list(node.payoff)
        if node.kind == CHANCE:
            acc = [Fraction(0)] * game.players
            for e in node.edges:
                for k, x in enumerate(go(e.child)):
                    acc[k] += e.prob * x
            return acc
        return go(node.child(choice[node.infoset]))
    return tuple(go(game.root))


def walk_reaches(game: Game, choice: dict[str, str], target: str) -> bool:
    """Whether ``target`` lies on a path the pure profile can follow."""
    def go(v: str) -> bool:
        if v == target:
            return True
        node = game.nodes[v]
        if node.kind == LEAF:
            return False
        if node.kind == CHANCE:
            return any(go(e.child) for e in node.edges)
        return go(node.child(choice[node.infoset]))
    return go(game.root)


# -- small CNFs up to renaming and polarity ----------------------------------------------

CNF_VARS = ("x1", "x2", "x3")


def all_clauses(variables=CNF_VARS):
    """Non-tautological clauses: each variable absent, positive or negative."""
    out = []
    for signs in itertools.product((None, True, False), repeat=len(variables)):
        c = tuple((v, s) for v, s in zip(variables, signs) if s is not None)
        if c:
            out.append(c)
    return out


def canonical_cnf(clauses, variables=CNF_VARS):
    index = {v: k for k, v in enumerate(variables)}
    best = None
    for perm in itertools.permutations(range(len(variables))):
        for flips in itertools.product((False, True), repeat=len(variables)):
            image = tuple(sorted(
                tuple(sorted((variables[perm[index[v]]], s != flips[index[v]]) for v, s in c)) for c in clauses
            ))
            if best is None or image < best:
                best = image
    return best


def cnf_orbits(max_clauses: int = 4):
    reps = set()
    clauses = all_clauses()
    for k in range(1, max_clauses + 1):
        for f in itertools.combinations(clauses, k):
            reps.add(canonical_cnf(f))
    return [CnfFormula(CNF_VARS, f) for f in sorted(reps, key=lambda f: (len(f), f))]


def dnf_terms():
    """The 8 consistent non-empty terms over x1, y1."""
    lits = [("x1", True), ("x1", False), ("y1", True), ("y1", False)]
    out = [frozenset([l]) for l in lits]
    out += [frozenset([a, b]) for a in lits[:2] for b in lits[2:]]
    return out


# -- random LPs with known certificates --------------------------------------------------

def _rand_q(rng: random.Random, lo: int = -5, hi: int = 5) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, 4))


def random_lp(rng: random.Random, feasible: bool, n: int | None = None, m: int | None = None):
    """A random system plus its certificate.

    Feasible systems are built around a point ``x0`` (returned). Infeasible ones
    contain rows a_k·x <= b_k and a final row whose positive combination with
    them reads 0 <= -1; the multipliers are returned.
    """
    from efgcorr.linsys import LinearSystem

    n = n or rng.randint(1, 6)
    m = m or rng.randint(1, 8)
    system = LinearSystem()
    names = [system.declare(f"w{k}", free=rng.random() < 0.3) for k in range(n)]
    x0 = {v: (_rand_q(rng, -4, 4) if v in system.free else _rand_q(rng, 0, 6)) for v in names}
    rows = []
    for r in range(m):
        a = {v: _rand_q(rng) for v in names if rng.random() < 0.7}
        lhs = sum((c * x0[v] for v, c in a.items()), Fraction(0))
        sense = rng.choice(("<=", ">=", "="))
        slack = Fraction(rng.randint(0, 3), rng.randint(1, 3))
        rhs = lhs + slack if sense == "<=" else lhs - slack if sense == ">=" else lhs
        rows.append((a, sense, rhs))
    if feasible:
        for r, (a, sense, rhs) in enumerate(rows):
            system.add(f"r{r}", a, sense, rhs)
        return system, x0
    # normalise to <= rows, then close with the contradicting combination
    ys = []
    total: dict[str, Fraction] = {v: Fraction(0) for v in names}
    bound = Fraction(0)
    for r, (a, sense, rhs) in enumerate(rows):
        if sense == ">=":
            a, rhs = {v: -c for v, c in a.items()}, -rhs
        system.add(f"r{r}", a, "<=", rhs)
        y = Fraction(rng.randint(1, 4))
        ys.append(y)
        for v, c in a.items():
            total[v] += y * c
        bound += y * rhs
    system.add("close", {v: -c for v, c in total.items()}, "<=", -bound - 1)
    ys.append(Fraction(1))
    return system, ys


def random_trigger(rng: random.Random, game: Game, mu: CorrelationPlan, concept, i: int) -> tuple:
    """A trigger of ``concept`` for player i, drawn uniformly from its shape."""
    from efgcorr.verify import Concept

    concept = Concept(concept)
    if concept == Concept.NFCCE:
        return ()
    if concept == Concept.NFCE:
        return (rng.choice(mu.support)[i],)
    I = rng.choice(game.player_infosets[i])
    acts = game.infosets[I].sorted_actions
    if concept == Concept.EFCE:
        return (I, rng.choice(acts))
    if concept == Concept.EFCCE:
        return (I,)
    if concept == Concept.AFCE:
        a, b = rng.sample(acts, 2)
        return (I, a, b)
    return (I, rng.choice(acts))
