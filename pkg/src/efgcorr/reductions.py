"""Game generators for quantified and plain satisfiability instances.

``reduce_qbf`` turns Φ = ∃x1∀y1…∃xn∀yn φ (φ in DNF) into an (n+2)-player game
whose best normal-form correlated equilibrium reaches welfare 3 exactly when Φ
is true. ``reduce_sat3`` turns a CNF φ into a two-player game with a pure
agent-form equilibrium of welfare 1 exactly when φ is satisfiable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .game import CHANCE, LEAF, PLAYER, Edge, Game, GameError, InfoSet, Node, make_game
from .strategy import CorrelationPlan, StrategyProfile, profile

Literal = tuple[str, bool]  # (variable, polarity)

EXISTS, FORALL = "exists", "forall"
TRUE, FALSE, CHECK = "T", "F", "check"


def lit_name(lit: Literal) -> str:
    return lit[0] if lit[1] else f"-{lit[0]}"


def parse_literal(text: str) -> Literal:
    text = text.strip()
    if text.startswith("-"):
        if len(text) == 1:
            raise GameError("empty literal")
        return text[1:], False
    if not text:
        raise GameError("empty literal")
    return text, True


# -- QBF ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class QbfFormula:
    """Prefix (quantifier, variable) pairs and a DNF matrix of terms."""

    prefix: tuple[tuple[str, str], ...]
    terms: tuple[frozenset[Literal], ...]

    def __post_init__(self) -> None:
        names = [v for _, v in self.prefix]
        if len(set(names)) != len(names):
            raise GameError("a variable is quantified twice")
        if any(q not in (EXISTS, FORALL) for q, _ in self.prefix):
            raise GameError("unknown quantifier")
        known = set(names)
        for t in self.terms:
            if not t:
                raise GameError("empty term")
            for v, _ in t:
                if v not in known:
                    raise GameError(f"literal over unquantified variable {v!r}")

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for _, v in self.prefix)

    @property
    def alternating(self) -> bool:
        qs = [q for q, _ in self.prefix]
        return bool(qs) and len(qs) % 2 == 0 and all(
            q == (EXISTS if k % 2 == 0 else FORALL) for k, q in enumerate(qs)
        )

    @property
    def n(self) -> int:
        return len(self.prefix) // 2

    def require_alternating(self) -> None:
        if not self.alternating:
            raise GameError("prefix must alternate exists/forall starting with exists and ending with forall")
        if not self.terms:
            raise GameError("the matrix needs at least one term")


def parse_qbf(text: str, pad: bool = False) -> QbfFormula:
    """Read ``exists``/``forall`` lines followed by ``term`` lines."""
    prefix: list[tuple[str, str]] = []
    terms: list[frozenset[Literal]] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head in (EXISTS, FORALL):
            if terms:
                raise GameError("quantifier line after the matrix")
            if not rest:
                raise GameError(f"{head} without variables")
            prefix.extend((head, v) for v in rest)
        elif head == "term":
            terms.append(frozenset(parse_literal(t) for t in rest))
        else:
            raise GameError(f"unrecognized line: {raw!r}")
    phi = QbfFormula(tuple(prefix), tuple(terms))
    if pad:
        phi = pad_prefix(phi)
    phi.require_alternating()
    return phi


def pad_prefix(phi: QbfFormula) -> QbfFormula:
    """Insert fresh unused variables until the prefix alternates ∃∀…∃∀."""
    used = set(phi.variables)
    fresh = (f"_pad{k}" for k in itertools.count(1))
    out: list[tuple[str, str]] = []
    expected = EXISTS

    def add(q: str, v: str) -> None:
        nonlocal expected
        out.append((q, v))
        expected = FORALL if q == EXISTS else EXISTS

    def filler() -> str:
        name = next(fresh)
        while name in used:
            name = next(fresh)
        return name

    for q, v in phi.prefix:
        if q != expected:
            add(expected, filler())
        add(q, v)
    if not out:
        add(EXISTS, filler())
    if expected == FORALL:
        add(FORALL, filler())
    return QbfFormula(tuple(out), phi.terms)


def satisfies(theta: Mapping[str, bool], term: Iterable[Literal]) -> bool:
    return all(theta[v] == pol for v, pol in term)


def dnf_holds(phi: QbfFormula, theta: Mapping[str, bool]) -> bool:
    return any(satisfies(theta, t) for t in phi.terms)


def qbf_true(phi: QbfFormula) -> bool:
    """Brute-force evaluation of the quantified formula."""
    def go(k: int, theta: dict[str, bool]) -> bool:
        if k == len(phi.prefix):
            return dnf_holds(phi, theta)
        q, v = phi.prefix[k]
        results = (go(k + 1, {**theta, v: b}) for b in (True, False))
        return any(results) if q == EXISTS else all(results)
    return go(0, {})


def _index(phi: QbfFormula) -> dict[str, int]:
    """Block number i (1-based) of each variable: x_i and y_i share block i."""
    return {v: k // 2 + 1 for k, (_, v) in enumerate(phi.prefix)}


def qbf_players(phi: QbfFormula) -> int:
    return phi.n + 2


def reduce_qbf(phi: QbfFormula) -> Game:
    """The (n+2)-player game: 1 assigns values, 2 picks a term, 2+j guards y_j."""
    phi.require_alternating()
    n = phi.n
    players = n + 2
    block = _index(phi)
    universals = [v for q, v in phi.prefix if q == FORALL]
    term_actions = tuple(f"t{k + 1}" for k in range(len(phi.terms)))

    nodes: list[Node] = []
    infosets: list[InfoSet] = [InfoSet("I_phi", 2, term_actions)]
    zero = (Fraction(0),) * players

    def payoff(**gifts: int) -> tuple[Fraction, ...]:
        out = list(zero)
        for key, val in gifts.items():
            out[int(key[1:]) - 1] = Fraction(val)
        return tuple(out)

    def leaf(id: str, pay: tuple[Fraction, ...]) -> str:
        nodes.append(Node(id, LEAF, payoff=pay))
        return id

    z_count = len(phi.variables)
    nodes.append(Node("C", CHANCE, tuple(Edge(f"A_{z}", prob=Fraction(1, z_count)) for z in phi.variables)))
    for z in phi.variables:
        i = block[z]
        infosets.append(InfoSet(f"A_{z}", 1, (TRUE, FALSE)))
        nodes.append(Node(f"A_{z}", PLAYER, (Edge(f"C_{z}", TRUE), Edge(f"C_-{z}", FALSE)), 1, f"A_{z}"))
        guards = list(range(i, n + 1))
        for j in guards:
            actions = (TRUE, FALSE, CHECK) if universals[j - 1] == z else (TRUE, FALSE)
            infosets.append(InfoSet(f"I_{j}_{z}", j + 2, actions))
        for pol in (True, False):
            lit = (z, pol)
            name = lit_name(lit)
            p = Fraction(1, len(guards) + 1)
            nodes.append(Node(f"C_{name}", CHANCE,
                              (Edge(f"F_{name}", prob=p),) + tuple(Edge(f"U_{j}_{name}", prob=p) for j in guards)))
            # Formula gadget: the term pays 3 unless it contains the opposite literal.
            kids = []
            for a, t in zip(term_actions, phi.terms):
                pay = zero if (z, not pol) in t else payoff(p2=3)
                kids.append(Edge(leaf(f"F_{name}/{a}", pay), a))
            nodes.append(Node(f"F_{name}", PLAYER, tuple(kids), 2, "I_phi"))
            right = TRUE if pol else FALSE
            for j in guards:
                me = f"p{j + 2}"
                kids = []
                if universals[j - 1] == z:
                    # Uncertainty gadget.
                    for a in (TRUE, FALSE):
                        kids.append(Edge(leaf(f"U_{j}_{name}/{a}", payoff(**{me: 2}) if a == right else zero), a))
                    kids.append(Edge(leaf(f"U_{j}_{name}/{CHECK}", payoff(**{me: 1, "p2": 2})), CHECK))
                else:
                    # Knowledge gadget.
                    for a in (TRUE, FALSE):
                        kids.append(Edge(leaf(f"U_{j}_{name}/{a}", payoff(p2=3) if a == right else zero), a))
                nodes.append(Node(f"U_{j}_{name}", PLAYER, tuple(kids), j + 2, f"I_{j}_{z}"))
    return make_game(players, infosets, nodes, "C")


def is_minimal_proof(phi: QbfFormula, proof: Sequence[Mapping[str, bool]]) -> bool:
    """Whether ``proof`` is a minimal explicit proof of Φ."""
    phi.require_alternating()
    names = phi.variables
    rows = []
    for theta in proof:
        if set(theta) != set(names):
            return False
        rows.append(tuple(bool(theta[v]) for v in names))
    if len(set(rows)) != len(rows) or not rows:
        return False
    if not all(dnf_holds(phi, dict(zip(names, r))) for r in rows):
        return False
    for k, (q, _) in enumerate(phi.prefix):
        children: dict[tuple, set[bool]] = {}
        for r in rows:
            children.setdefault(r[:k], set()).add(r[k])
        for kids in children.values():
            if q == FORALL and len(kids) != 2:
                return False
            if q == EXISTS and len(kids) != 1:
                return False
    return True


def minimal_proof(phi: QbfFormula) -> list[dict[str, bool]] | None:
    """A minimal explicit proof of a true Φ (existentials prefer True), else None."""
    def go(k: int, theta: dict[str, bool]) -> list[dict[str, bool]] | None:
        if k == len(phi.prefix):
            return [dict(theta)] if dnf_holds(phi, theta) else None
        q, v = phi.prefix[k]
        if q == EXISTS:
            for b in (True, False):
                sub = go(k + 1, {**theta, v: b})
                if sub is not None:
                    return sub
            return None
        parts = [go(k + 1, {**theta, v: b}) for b in (True, False)]
        if any(p is None for p in parts):
            return None
        return parts[0] + parts[1]
    return go(0, {})


def good_profile(game: Game, phi: QbfFormula, theta: Mapping[str, bool], term: int | None = None) -> StrategyProfile:
    """The good profile for assignment θ and the term with index ``term``.

    Without ``term`` the first term θ satisfies is used.
    """
    if term is None:
        term = next((k for k, t in enumerate(phi.terms) if satisfies(theta, t)), None)
        if term is None:
            raise GameError("the assignment satisfies no term")
    universals = [v for q, v in phi.prefix if q == FORALL]
    block = _index(phi)
    choice = {f"A_{z}": TRUE if theta[z] else FALSE for z in phi.variables}
    choice["I_phi"] = f"t{term + 1}"
    for z in phi.variables:
        for j in range(block[z], phi.n + 1):
            choice[f"I_{j}_{z}"] = CHECK if universals[j - 1] == z else (TRUE if theta[z] else FALSE)
    return profile(game, choice)


def is_good_profile(game: Game, phi: QbfFormula, sigma: StrategyProfile) -> bool:
    theta = {z: sigma.get(f"A_{z}") == TRUE for z in phi.variables}
    term = int(sigma.get("I_phi")[1:]) - 1
    if not satisfies(theta, phi.terms[term]):
        return False
    return good_profile(game, phi, theta, term).key == sigma.key


def qbf_proof_plan(phi: QbfFormula, proof: Sequence[Mapping[str, bool]], game: Game | None = None) -> CorrelationPlan:
    """Uniform plan over the good profiles σ_θ, θ in a minimal explicit proof."""
    if not is_minimal_proof(phi, proof):
        raise GameError("not a minimal explicit proof")
    game = game or reduce_qbf(phi)
    return CorrelationPlan.uniform([good_profile(game, phi, theta) for theta in proof])


# -- CNF -----------------------------------------------------------------------------------

@dataclass(frozen=True)
class CnfFormula:
    variables: tuple[str, ...]
    clauses: tuple[tuple[Literal, ...], ...]

    def __post_init__(self) -> None:
        known = set(self.variables)
        for c in self.clauses:
            if not c:
                raise GameError("empty clause")
            for v, _ in c:
                if v not in known:
                    raise GameError(f"literal over undeclared variable {v!r}")

    @staticmethod
    def of(clauses: Iterable[Iterable[str | Literal]]) -> "CnfFormula":
        """Build from literal strings such as ``["x", "-y"]``."""
        out = []
        for c in clauses:
            lits = [parse_literal(l) if isinstance(l, str) else l for l in c]
            out.append(tuple(dict.fromkeys(lits)))
        names = sorted({v for c in out for v, _ in c})
        return CnfFormula(tuple(names), tuple(out))

    def holds(self, theta: Mapping[str, bool]) -> bool:
        return all(any(theta[v] == pol for v, pol in c) for c in self.clauses)

    def satisfying(self) -> list[dict[str, bool]]:
        out = []
        for bits in itertools.product((True, False), repeat=len(self.variables)):
            theta = dict(zip(self.variables, bits))
            if self.holds(theta):
                out.append(theta)
        return out


def parse_dimacs(text: str) -> CnfFormula:
    declared = None
    clauses: list[list[str]] = []
    current: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise GameError(f"bad problem line {raw!r}")
            try:
                declared = int(parts[2])
            except ValueError as exc:
                raise GameError(f"bad problem line {raw!r}") from exc
            continue
        for tok in line.split():
            try:
                k = int(tok)
            except ValueError as exc:
                raise GameError(f"bad literal {tok!r}") from exc
            if k == 0:
                if not current:
                    raise GameError("empty clause")
                clauses.append(current)
                current = []
            else:
                if declared is not None and abs(k) > declared:
                    raise GameError(f"variable {abs(k)} exceeds the declared count")
                current.append(str(k))
    if current:
        clauses.append(current)
    if declared is None:
        raise GameError("missing problem line")
    phi = CnfFormula.of(clauses)
    names = tuple(str(k) for k in range(1, declared + 1))
    return CnfFormula(names, phi.clauses)


def reduce_sat3(phi: CnfFormula) -> Game:
    """Spoiler (1) may end at (-1, 2) or challenge a clause; the φ-player (2)
    answers per variable without seeing which clause or literal was picked."""
    nodes: list[Node] = []
    infosets: dict[str, InfoSet] = {}
    root_edges = [Edge("end", "end")]
    nodes.append(Node("end", LEAF, payoff=(Fraction(-1), Fraction(2))))
    for k, clause in enumerate(phi.clauses, start=1):
        c = f"C_{k}"
        root_edges.append(Edge(c, f"c{k}"))
        names = tuple(lit_name(l) for l in clause)
        infosets[c] = InfoSet(c, 1, names)
        kids = []
        for lit, name in zip(clause, names):
            n_id = f"N_{name}_{k}"
            var, pol = lit
            I = f"I_{var}"
            infosets.setdefault(I, InfoSet(I, 2, (TRUE, FALSE)))
            leaves = []
            for a in (TRUE, FALSE):
                good = (a == TRUE) == pol
                pay = (Fraction(-1), Fraction(2)) if good else (Fraction(0), Fraction(0))
                nodes.append(Node(f"{n_id}/{a}", LEAF, payoff=pay))
                leaves.append(Edge(f"{n_id}/{a}", a))
            nodes.append(Node(n_id, PLAYER, tuple(leaves), 2, I))
            kids.append(Edge(n_id, name))
        nodes.append(Node(c, PLAYER, tuple(kids), 1, c))
    infosets["R"] = InfoSet("R", 1, tuple(e.action for e in root_edges))
    nodes.append(Node("R", PLAYER, tuple(root_edges), 1, "R"))
    return make_game(2, list(infosets.values()), nodes, "R")


def sat_plan(phi: CnfFormula, theta: Mapping[str, bool], game: Game | None = None) -> CorrelationPlan:
    """Dirac plan: end at the root, pick a satisfied literal per clause, answer θ."""
    missing = [v for v in phi.variables if v not in theta]
    if missing:
        raise GameError(f"assignment misses {missing}")
    if not phi.holds(theta):
        raise GameError("the assignment does not satisfy the formula")
    game = game or reduce_sat3(phi)
    choice = {"R": "end"}
    for k, clause in enumerate(phi.clauses, start=1):
        lit = next(l for l in clause if theta[l[0]] == l[1])
        choice[f"C_{k}"] = lit_name(lit)
    for I in game.infosets:
        if I.startswith("I_"):
            choice[I] = TRUE if theta[I[2:]] else FALSE
    return CorrelationPlan.dirac(profile(game, choice))
