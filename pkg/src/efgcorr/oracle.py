"""Normal-form baseline: one LP over all of Σ.

Every incentive constraint is written directly over the probabilities μ(σ) of
all pure profiles, with deviations enumerated explicitly rather than through
the best-deviation recursion. Exponential in the game size by design; it is the
independent reference the polynomial systems are checked against.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .game import Game, GameError, format_rational
from .linsys import LinearSystem
from .lp import solve
from .strategy import CorrelationPlan, PureStrategy, ScaleError, StrategyProfile, count_strategies, outcome, plan_to_json
from .verify import Concept

ORACLE_CAP = 10**5
ORACLE_CONCEPTS = (Concept.NFCE, Concept.NFCCE, Concept.EFCE, Concept.EFCCE, Concept.AFCE, Concept.AFCCE)


@dataclass(frozen=True)
class OracleReport:
    concept: Concept
    feasible: bool
    value: Fraction | None
    plan: CorrelationPlan | None
    sigma_size: int
    n_constraints: int

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "concept": self.concept.value,
            "feasible": self.feasible,
            "sigma_size": self.sigma_size,
            "constraints": self.n_constraints,
        }
        if self.value is not None:
            doc["value"] = format_rational(self.value)
        if self.plan is not None:
            doc.update(plan_to_json(self.plan))
        return doc


class NormalForm:
    """Σ with per-profile payoff tables, indexed by mixed radix (player 1 slowest)."""

    def __init__(self, game: Game, cap: int = ORACLE_CAP) -> None:
        self.game = game
        n = game.players
        sizes = [count_strategies(game, game.player_infosets[i]) for i in range(1, n + 1)]
        total = 1
        for s in sizes:
            total *= s
        if total > cap:
            raise ScaleError(f"|Σ| = {total} exceeds the oracle cap {cap}")
        self.sizes = sizes
        self.size = total
        self.infosets = [game.player_infosets[i] for i in range(1, n + 1)]
        self.strategies = [
            list(itertools.product(*[game.infosets[I].sorted_actions for I in sets])) for sets in self.infosets
        ]
        self.strategy_index = [{s: k for k, s in enumerate(per)} for per in self.strategies]
        self.radix = [1] * n
        for p in range(n - 2, -1, -1):
            self.radix[p] = self.radix[p + 1] * sizes[p + 1]

        self.parts: list[tuple[int, ...]] = list(itertools.product(*[range(s) for s in sizes]))
        self.utility: list[tuple[Fraction, ...]] = []
        self.welfare: list[Fraction] = []
        self.below: list[dict[str, Fraction]] = []  # Σ_{v below I} P_C u_owner(v)
        owner = {I: game.player_of(I) for I in game.infosets}
        for parts in self.parts:
            table = self.table(parts)
            u = [Fraction(0)] * n
            w = Fraction(0)
            below: dict[str, Fraction] = {}
            for v, pc in outcome(game, table):
                pay = game.nodes[v].payoff
                for p in range(n):
                    u[p] += pc * pay[p]
                w += pc * game.welfare(v)
                for I, _ in game.path[v]:
                    below[I] = below.get(I, Fraction(0)) + pc * pay[owner[I] - 1]
            self.utility.append(tuple(u))
            self.welfare.append(w)
            self.below.append(below)

    def table(self, parts: tuple[int, ...]) -> dict[str, str]:
        out = {}
        for p, k in enumerate(parts):
            out.update(zip(self.infosets[p], self.strategies[p][k]))
        return out

    def profile(self, k: int) -> StrategyProfile:
        parts = self.parts[k]
        return StrategyProfile(tuple(
            PureStrategy(p + 1, tuple(zip(self.infosets[p], self.strategies[p][parts[p]])))
            for p in range(len(parts))
        ))

    def swap(self, k: int, i: int, s: int) -> int:
        """Index of profile k with player i's strategy replaced by strategy s."""
        return k + (s - self.parts[k][i - 1]) * self.radix[i - 1]

    def deviate(self, i: int, s: int, beta: dict[int, str]) -> int:
        """Index of strategy s of player i after applying β (positions -> actions)."""
        t = list(self.strategies[i - 1][s])
        for pos, a in beta.items():
            t[pos] = a
        return self.strategy_index[i - 1][tuple(t)]


def _rows(nf: NormalForm, concept: Concept):
    """Yield incentive rows as {profile index: coefficient}, meaning Σ coef·μ >= 0."""
    game = nf.game
    for i in range(1, game.players + 1):
        sets = nf.infosets[i - 1]
        pos = {I: k for k, I in enumerate(sets)}
        n_i = nf.sizes[i - 1]
        if concept == Concept.NFCE:
            for alpha in range(n_i):
                members = [k for k in range(nf.size) if nf.parts[k][i - 1] == alpha]
                for beta in range(n_i):
                    if beta != alpha:
                        yield {k: nf.utility[k][i - 1] - nf.utility[nf.swap(k, i, beta)][i - 1] for k in members}
            continue
        if concept == Concept.NFCCE:
            for beta in range(n_i):
                yield {k: nf.utility[k][i - 1] - nf.utility[nf.swap(k, i, beta)][i - 1] for k in range(nf.size)}
            continue
        for I in sets:
            acts = game.infosets[I].sorted_actions
            if concept in (Concept.AFCE, Concept.AFCCE):
                betas = [{pos[I]: b} for b in acts]
            else:
                betas = _distinct_deviations(game, i, I, pos)
            recommended = acts if concept in (Concept.EFCE, Concept.AFCE) else (None,)
            for a in recommended:
                for beta in betas:
                    if concept == Concept.AFCE and beta[pos[I]] == a:
                        continue
                    row = {}
                    for k in range(nf.size):
                        s = nf.parts[k][i - 1]
                        if a is not None and nf.strategies[i - 1][s][pos[I]] != a:
                            continue
                        k2 = nf.swap(k, i, nf.deviate(i, s, beta))
                        row[k] = nf.below[k].get(I, Fraction(0)) - nf.below[k2].get(I, Fraction(0))
                    yield row


def _distinct_deviations(game: Game, i: int, I: str, pos: dict[str, int]) -> list[dict[int, str]]:
    """Every β with domain {J : I ⪯ J}, keeping one per set of admitted leaves below I."""
    domain = game.below_infosets(I)
    leaves = game.leaves_below(I)
    mine = [[(J, a) for J, a in game.histories[v][i - 1] if J in domain] for v in leaves]
    seen: set[frozenset[str]] = set()
    out = []
    for combo in itertools.product(*[game.infosets[J].sorted_actions for J in domain]):
        choice = dict(zip(domain, combo))
        sig = frozenset(v for v, pairs in zip(leaves, mine) if all(choice[J] == a for J, a in pairs))
        if sig not in seen:
            seen.add(sig)
            out.append({pos[J]: a for J, a in choice.items()})
    return out


def incentive_rows(nf: NormalForm, concept: Concept) -> list[dict[int, Fraction]]:
    """Nontrivial, distinct incentive rows for ``concept``."""
    rows, seen = [], set()
    for row in _rows(nf, concept):
        row = {k: c for k, c in row.items() if c}
        if all(c > 0 for c in row.values()):
            continue  # implied by μ >= 0
        key = tuple(sorted(row.items()))
        if key not in seen:
            seen.add(key)
            rows.append(row)
    return rows


def oracle_system(game: Game, concept: Concept | str, threshold: Fraction | int | None = None,
                  maximize: bool = False, cap: int = ORACLE_CAP) -> tuple[LinearSystem, NormalForm]:
    concept = Concept(concept)
    if concept not in ORACLE_CONCEPTS:
        raise GameError(f"the oracle does not handle {concept.value}")
    if (threshold is None) == (not maximize):
        raise ValueError("give exactly one of threshold or maximize")
    nf = NormalForm(game, cap)
    system = LinearSystem()
    xs = [system.declare(f"mu_{k}") for k in range(nf.size)]
    system.add("simplex", [(x, 1) for x in xs], "=", 1)
    for r, row in enumerate(incentive_rows(nf, concept)):
        system.add(f"incentive_{r}", [(xs[k], c) for k, c in sorted(row.items())], ">=")
    welfare = [(xs[k], w) for k, w in enumerate(nf.welfare)]
    if maximize:
        system.maximize(welfare)
    else:
        system.add("threshold", welfare, ">=", Fraction(threshold))
    return system, nf


def oracle_solve(game: Game, concept: Concept | str, threshold: Fraction | int | None = None,
                 maximize: bool = False, cap: int = ORACLE_CAP) -> OracleReport:
    """Threshold decision or optimal objective over the concept's polytope in Σ-space."""
    concept = Concept(concept)
    system, nf = oracle_system(game, concept, threshold, maximize, cap)
    n_rows = len(system.constraints)
    result = solve(system)
    if not result.feasible:
        return OracleReport(concept, False, None, None, nf.size, n_rows)
    plan = CorrelationPlan.of(
        (nf.profile(k), result.assignment[f"mu_{k}"]) for k in range(nf.size) if result.assignment[f"mu_{k}"]
    )
    value = sum((p * nf.welfare[k] for k, p in
                 ((k, result.assignment[f"mu_{k}"]) for k in range(nf.size))), Fraction(0))
    return OracleReport(concept, True, value, plan, nf.size, n_rows)
