"""
Bit-fixing execution harness.

A bit-fixing algorithm is a prefix f that queries the oracle up to P times
and outputs a bit plus a residual (a leftover quantum state or a classical
token), and an online algorithm B that plays the game with at most T
queries. The game is only played on oracles where f outputs 0; here that
conditioning is done exactly over the ensemble instead of by rejection
sampling.
"""

import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .adversary import (
    AdviceFamily,
    RegisterLayout,
    StrategyCircuit,
    challenge_key,
    start_branches,
)
from .altmeas import ControlledProjection, JointState, evolve_exact, uniform_joint
from .config import get_settings, parallel_map
from .errors import (
    CapExceeded,
    ConfigError,
    EvenRounds,
    NeverAccepts,
    OracleError,
    QueryBudgetExceeded,
)
from .game import Answer, GameSpec
from .oracle import CountingOracle, OracleEnsemble, OracleTable
from .spectral import game_povm

logger = logging.getLogger(__name__)

ACCEPT_TOL = 1e-14


@dataclass(frozen=True)
class ClassicalFixing:
    """At most P (input, output) constraints on the oracle."""

    points: Tuple[Tuple[int, int], ...]

    def __post_init__(self) -> None:
        points = tuple((int(x), int(y)) for x, y in self.points)
        object.__setattr__(self, "points", points)
        inputs = [x for x, _ in points]
        if len(set(inputs)) != len(inputs):
            raise OracleError(f"Fixing {points} constrains an input twice")
        if any(x < 0 or y < 0 for x, y in points):
            raise OracleError(f"Fixing {points} has negative entries")

    def __len__(self) -> int:
        return len(self.points)

    def check(self, domain_size: int, range_size: int) -> None:
        for x, y in self.points:
            if x >= domain_size or y >= range_size:
                raise OracleError(f"Fixing point ({x}, {y}) outside [{domain_size}]->[{range_size}]")

    def describe(self) -> str:
        return "fix{" + ",".join(f"{x}:{y}" for x, y in self.points) + "}"


@dataclass(frozen=True)
class LeftoverState:
    """Sub-normalized post-prefix joint states, one per advice branch."""

    branches: Tuple[Tuple[float, JointState], ...]

    def reduced_advice_state(self) -> np.ndarray:
        return sum(w * joint.reduced_advice_state() for w, joint in self.branches)


@dataclass(frozen=True)
class PrefixOutcome:
    """Pr[f^H = 0], the residual handed to the online phase, and the queries made."""

    accept: float
    residual: Any
    queries: int


class Prefix(ABC):
    name: str
    query_budget: int

    @abstractmethod
    def run(self, game: GameSpec, H: OracleTable) -> PrefixOutcome:
        ...


class EmptyPrefix(Prefix):
    """f that always outputs 0 without querying."""

    name = "empty"
    query_budget = 0

    def run(self, game: GameSpec, H: OracleTable) -> PrefixOutcome:
        return PrefixOutcome(1.0, None, 0)


class ClassicalFixingPrefix(Prefix):
    """f outputs 0 iff H agrees with the fixing; the fixing is the token."""

    def __init__(self, fixing: ClassicalFixing):
        self.fixing = fixing
        self.name = fixing.describe()
        self.query_budget = len(fixing)

    def run(self, game: GameSpec, H: OracleTable) -> PrefixOutcome:
        self.fixing.check(H.domain_size, H.range_size)
        counter = CountingOracle(H)
        accept = all(counter(x) == y for x, y in self.fixing.points)
        return PrefixOutcome(1.0 if accept else 0.0, self.fixing, counter.calls)


class AlternatingPrefix(Prefix):
    """
    f runs ``rounds`` rounds of the alternating game and outputs 0 iff every
    outcome was 0; the residual is the leftover joint state.
    """

    def __init__(self, adv: AdviceFamily, strat: StrategyCircuit, game: GameSpec,
                 layout: RegisterLayout, rounds: int):
        if rounds < 0:
            raise ConfigError("Prefix round count must be non-negative")
        self.adv = adv
        self.strat = strat
        self.layout = layout
        self.rounds = rounds
        self.name = f"altmeas[{rounds}]"
        self.query_budget = ((rounds + 1) // 2) * (
            2 * strat.query_count + 2 * game.t_samp + game.t_verify
        )

    def run(self, game: GameSpec, H: OracleTable) -> PrefixOutcome:
        cp = ControlledProjection(game, H, self.strat, self.layout)
        branches = []
        for w, start in start_branches(self.adv, self.layout, H):
            post = evolve_exact(cp, uniform_joint(start, game.num_coins), self.rounds)
            branches.append((w, post))
        accept = sum(w * joint.norm_sq for w, joint in branches)
        cp_rounds = (self.rounds + 1) // 2
        return PrefixOutcome(accept, LeftoverState(tuple(branches)), cp_rounds * cp.query_cost)


class Online(ABC):
    name: str
    query_count: int

    def bind(self, game: GameSpec, ensemble: OracleEnsemble, prefix: Prefix) -> "Online":
        """Specialize to a prefix; most online algorithms need nothing."""
        return self

    @abstractmethod
    def joint_win(self, game: GameSpec, H: OracleTable, outcome: PrefixOutcome) -> float:
        """Pr[f^H = 0 and B wins] for one oracle."""


class QuantumOnline(Online):
    """
    Runs the strategy on the advice register of the residual state, or on
    the adversary's own start state after an empty prefix.
    """

    def __init__(self, adv: AdviceFamily, strat: StrategyCircuit, layout: RegisterLayout):
        self.adv = adv
        self.strat = strat
        self.layout = layout
        self.name = "quantum"
        self.query_count = strat.query_count

    def joint_win(self, game: GameSpec, H: OracleTable, outcome: PrefixOutcome) -> float:
        if isinstance(outcome.residual, LeftoverState):
            rho = outcome.residual.reduced_advice_state()
        else:
            rho = outcome.accept * sum(
                w * np.outer(s, s.conj()) for w, s in start_branches(self.adv, self.layout, H)
            )
        P = game_povm(game, H, self.strat, self.layout).matrix
        return float(np.sum(P * rho.T).real)


class ConstantOnline(Online):
    """B outputs a fixed answer without querying."""

    def __init__(self, answer: Answer):
        self.answer = answer
        self.name = f"const[{answer}]"
        self.query_count = 0

    def joint_win(self, game: GameSpec, H: OracleTable, outcome: PrefixOutcome) -> float:
        if outcome.accept == 0.0:
            return 0.0
        wins = sum(game.wins(H, r, self.answer) for r in game.coin_space)
        return outcome.accept * wins / game.num_coins


class BestResponseOnline(Online):
    """
    The best T = 0 classical response to the prefix: per challenge, the
    answer most likely to win given that the prefix accepted.
    """

    name = "best-response"
    query_count = 0

    def __init__(self, responses: Optional[Dict[str, Answer]] = None):
        self.responses = responses

    def bind(self, game: GameSpec, ensemble: OracleEnsemble, prefix: Prefix) -> "BestResponseOnline":
        scores: Dict[str, np.ndarray] = {}
        for H, w in ensemble:
            outcome = prefix.run(game, H)
            if outcome.accept == 0.0:
                continue
            for r in game.coin_space:
                key = challenge_key(game.challenge(H, r))
                row = scores.setdefault(key, np.zeros(len(game.answer_space)))
                for a, ans in enumerate(game.answer_space):
                    row[a] += w * outcome.accept * game.wins(H, r, ans)
        return BestResponseOnline(
            {key: game.answer_value(int(np.argmax(row))) for key, row in scores.items()}
        )

    def joint_win(self, game: GameSpec, H: OracleTable, outcome: PrefixOutcome) -> float:
        if self.responses is None:
            raise ConfigError("BestResponseOnline must be bound to a prefix before use")
        if outcome.accept == 0.0:
            return 0.0
        wins = 0
        for r in game.coin_space:
            ans = self.responses.get(challenge_key(game.challenge(H, r)), game.answer_value(0))
            wins += game.wins(H, r, ans)
        return outcome.accept * wins / game.num_coins


@dataclass(frozen=True)
class BfAlgorithm:
    prefix: Prefix
    online: Online
    P: int
    T: int

    def __post_init__(self) -> None:
        if self.prefix.query_budget > self.P:
            raise ConfigError(f"Prefix {self.prefix.name} declares {self.prefix.query_budget} > P={self.P} queries")
        if self.online.query_count > self.T:
            raise ConfigError(f"Online {self.online.name} makes {self.online.query_count} > T={self.T} queries")


@dataclass(frozen=True)
class BfResult:
    joint: float
    conditional: float
    accept_rate: float
    max_prefix_queries: int


def run_bf_game(bf: BfAlgorithm, game: GameSpec, ensemble: OracleEnsemble) -> BfResult:
    """
    Exact joint and conditional win probabilities of a bit-fixing algorithm.

    Args:
        bf: Prefix/online pair with its budgets.
        game: The game.
        ensemble: Oracle ensemble.

    Returns:
        joint = sum_H w_H Pr[f^H = 0 and B wins], accept_rate = sum_H w_H Pr[f^H = 0],
        conditional = joint / accept_rate.
    """
    online = bf.online.bind(game, ensemble, bf.prefix)

    def per_oracle(H: OracleTable) -> Tuple[float, float, int]:
        outcome = bf.prefix.run(game, H)
        if outcome.queries > bf.prefix.query_budget:
            raise QueryBudgetExceeded(
                f"Prefix {bf.prefix.name} made {outcome.queries} queries, "
                f"declared {bf.prefix.query_budget}"
            )
        return outcome.accept, online.joint_win(game, H, outcome), outcome.queries

    results = parallel_map(per_oracle, ensemble.tables)
    accept = sum(w * a for (a, _, _), w in zip(results, ensemble.weights))
    joint = sum(w * j for (_, j, _), w in zip(results, ensemble.weights))
    if accept <= ACCEPT_TOL:
        raise NeverAccepts(f"Prefix {bf.prefix.name} never outputs 0")
    return BfResult(joint, joint / accept, accept, max(q for _, _, q in results))


def build_prefix_from_altmeas(adv: AdviceFamily, strat: StrategyCircuit, game: GameSpec,
                              layout: RegisterLayout, k: int) -> BfAlgorithm:
    """
    Turn a k-round alternating-game adversary into a bit-fixing algorithm.

    f plays the first k - 1 rounds and accepts iff all outcomes were 0; B
    runs the strategy once on what is left, so B's conditional win
    probability is epsilon^(k).

    Args:
        adv: Advice family.
        strat: Strategy circuit.
        game: The game.
        layout: Register layout.
        k: Odd round count.

    Returns:
        The algorithm with P = (k - 1)(T + T_Samp + T_Verify).
    """
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    if k % 2 == 0:
        raise EvenRounds(f"k={k} is even; bound it through epsilon^(k) <= epsilon^(k+1)")
    prefix: Prefix = EmptyPrefix() if k == 1 else AlternatingPrefix(adv, strat, game, layout, k - 1)
    budget = (k - 1) * (strat.query_count + game.t_samp + game.t_verify)
    return BfAlgorithm(prefix, QuantumOnline(adv, strat, layout), budget, strat.query_count)


def classical_fixings(game: GameSpec, P: int, cap: Optional[int] = None) -> List[ClassicalFixing]:
    """Every fixing of at most P oracle points, smallest first."""
    N, M = game.oracle_domain, game.oracle_range
    cap = get_settings().enumeration_cap if cap is None else cap
    total = sum(comb(N, size) * M**size for size in range(min(P, N) + 1))
    if total > cap:
        raise CapExceeded(f"{total} fixings of up to {P} points exceed the cap {cap}")
    fixings = []
    for size in range(min(P, N) + 1):
        for xs in itertools.combinations(range(N), size):
            for ys in itertools.product(range(M), repeat=size):
                fixings.append(ClassicalFixing(tuple(zip(xs, ys))))
    return fixings


@dataclass(frozen=True)
class NuEstimate:
    """
    Best values found over finite families; a LOWER bound on nu(P, T).

    ``frame`` has one row per (prefix, online) pair with columns P, T,
    family_id, joint, conditional, accept_rate and formula_flag.
    """

    frame: pd.DataFrame
    best_conditional: float
    best_joint: float


def estimate_nu(game: GameSpec, prefix_family: Sequence[Prefix], online_family: Sequence[Online],
                ensemble: OracleEnsemble, P: int, T: int,
                nu_formula: Optional[float] = None) -> NuEstimate:
    """
    Search prefix/online pairs within the (P, T) budgets.

    Args:
        game: The game.
        prefix_family: Candidate prefixes; those declaring more than P queries are skipped.
        online_family: Candidate online algorithms; those above T are skipped.
        ensemble: Oracle ensemble.
        P: Prefix budget.
        T: Online budget.
        nu_formula: Optional formula value to compare against; rows whose
            conditional exceeds it while their joint does not are flagged.

    Returns:
        The per-pair table and the best conditional and joint values.
    """
    rows: List[Dict[str, Any]] = []
    for prefix in prefix_family:
        if prefix.query_budget > P:
            continue
        for online in online_family:
            if online.query_count > T:
                continue
            try:
                result = run_bf_game(BfAlgorithm(prefix, online, P, T), game, ensemble)
            except NeverAccepts:
                logger.debug(f"Skipping {prefix.name}: never accepts on this ensemble")
                break
            flag = (
                nu_formula is not None
                and result.conditional > nu_formula
                and result.joint <= nu_formula
            )
            rows.append({
                "P": P,
                "T": T,
                "family_id": f"{prefix.name}|{online.name}",
                "joint": result.joint,
                "conditional": result.conditional,
                "accept_rate": result.accept_rate,
                "formula_flag": bool(flag),
            })
    frame = pd.DataFrame(
        rows, columns=["P", "T", "family_id", "joint", "conditional", "accept_rate", "formula_flag"]
    )
    if frame.empty:
        logger.warning(f"No prefix/online pair fits P={P}, T={T} and accepts")
        return NuEstimate(frame, 0.0, 0.0)
    return NuEstimate(frame, float(frame["conditional"].max()), float(frame["joint"].max()))
