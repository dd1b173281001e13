"""
Classical advice against YZ-style inversion, and its quantum contrast.

Covers the list-recovery counting skeleton (the Good set and the
L/2^n + 2^{-zeta n} bound) and the exact meaning of "S bits of classical
advice, no queries": choose at most 2^S response maps and let every oracle
use its best one. That is a weighted max-coverage problem, solved exactly
on small instances and greedily otherwise.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .adversary import (
    LocalUnitary,
    RegisterLayout,
    StrategyCircuit,
    challenge_key,
    check_layout,
)
from .bfqrom import ClassicalFixing
from .config import get_settings, parallel_map
from .errors import CapExceeded, ConfigError, DimensionMismatch
from .game import Answer, Challenge, GameSpec, YzCode, yz_bits
from .oracle import OracleEnsemble
from .spectral import compressed_operator, game_povm, optimal_nonuniform_value

logger = logging.getLogger(__name__)

GREEDY_RATIO = 1 - 1 / math.e


@dataclass(frozen=True)
class ListRecoveryInstance:
    """Per-coordinate candidate lists S_1..S_n for a code, with slack zeta."""

    code: YzCode
    lists: Tuple[FrozenSet[int], ...]
    zeta: float
    ell: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "lists", tuple(frozenset(s) for s in self.lists))
        if len(self.lists) != self.code.n:
            raise ConfigError(f"Need {self.code.n} lists, got {len(self.lists)}")
        if not 0.0 <= self.zeta <= 1.0:
            raise ConfigError(f"zeta must lie in [0, 1], got {self.zeta}")
        if self.ell is not None and any(len(s) > self.ell for s in self.lists):
            raise ConfigError(f"Some list is longer than ell={self.ell}")

    def matches(self, word: Sequence[int]) -> int:
        return sum(c in s for c, s in zip(word, self.lists))


def good_set(inst: ListRecoveryInstance) -> Tuple[Tuple[Tuple[int, ...], ...], int]:
    """
    Codewords agreeing with the lists on at least (1 - zeta) n coordinates.

    Returns:
        (codewords, count)
    """
    need = (1.0 - inst.zeta) * inst.code.n - 1e-12
    good = tuple(w for w in inst.code.codewords if inst.matches(w) >= need)
    return good, len(good)


def counting_bound(L_count: int, n: int, zeta: float) -> float:
    """L / 2^n + 2^{-zeta n}, clamped to 1."""
    return min(1.0, L_count / 2**n + 2.0 ** (-zeta * n))


@dataclass(frozen=True)
class CoverageInstance:
    """
    Weighted oracles against candidate response maps.

    ``win[h, j]`` is the probability over coins that map j wins on oracle h.
    """

    weights: np.ndarray
    win: np.ndarray
    labels: Tuple[Any, ...]
    challenges: Tuple[Challenge, ...] = ()

    def __post_init__(self) -> None:
        if self.win.shape != (len(self.weights), len(self.labels)):
            raise DimensionMismatch(
                f"Win matrix {self.win.shape} does not match "
                f"{len(self.weights)} oracles x {len(self.labels)} maps"
            )
        if np.any(self.win < -1e-12) or np.any(self.win > 1 + 1e-12):
            raise ConfigError("Win entries must lie in [0, 1]")

    @property
    def num_maps(self) -> int:
        return len(self.labels)

    def value(self, chosen: Sequence[int]) -> float:
        if not chosen:
            return 0.0
        return float(self.weights @ self.win[:, list(chosen)].max(axis=1))


def build_coverage_instance(game: GameSpec, ensemble: OracleEnsemble,
                            maps: Optional[Sequence[Dict[Challenge, Answer]]] = None,
                            cap: Optional[int] = None) -> CoverageInstance:
    """
    Coverage instance over challenge-to-answer maps.

    Args:
        game: The game.
        ensemble: Oracle ensemble.
        maps: Candidate maps; all |A|^{#challenges} maps when None.
        cap: Limit on the number of generated maps (``QROM_MAP_CAP``).

    Returns:
        The instance; labels are the maps as answer tuples over ``challenges``.
    """
    challenges: Dict[str, Challenge] = {}
    for H in ensemble.tables:
        for r in game.coin_space:
            ch = game.challenge(H, r)
            challenges.setdefault(challenge_key(ch), ch)
    keys = list(challenges)
    if maps is None:
        cap = get_settings().map_cap if cap is None else cap
        count = len(game.answer_space) ** len(keys)
        if count > cap:
            raise CapExceeded(f"{count} response maps exceed the map cap {cap}")
        tables = list(itertools.product(game.answer_space, repeat=len(keys)))
    else:
        tables = []
        for m in maps:
            by_key = {challenge_key(ch): ans for ch, ans in m.items()}
            tables.append(tuple(by_key.get(k, game.answer_value(0)) for k in keys))

    position = {k: i for i, k in enumerate(keys)}
    win = np.zeros((len(ensemble), len(tables)))
    for h, H in enumerate(ensemble.tables):
        for r in game.coin_space:
            i = position[challenge_key(game.challenge(H, r))]
            for j, table in enumerate(tables):
                win[h, j] += game.wins(H, r, table[i])
    win /= game.num_coins
    return CoverageInstance(np.asarray(ensemble.weights), win, tuple(tables),
                            tuple(challenges[k] for k in keys))


def readout_coverage_instance(game: GameSpec, strat: StrategyCircuit, ensemble: OracleEnsemble,
                              layout: RegisterLayout) -> CoverageInstance:
    """One candidate per advice basis state a under a fixed strategy: w[H][a] = Q^H[a, a]."""
    check_layout(game, layout)
    Qs = parallel_map(
        lambda H: compressed_operator(game_povm(game, H, strat, layout), layout), ensemble.tables
    )
    win = np.clip(np.array([np.diag(Q).real for Q in Qs]), 0.0, 1.0)
    return CoverageInstance(np.asarray(ensemble.weights), win,
                            tuple(range(layout.advice_dimension)))


@dataclass(frozen=True)
class CoverageResult:
    chosen: Tuple[int, ...]
    value: float
    method: str


def _exact(cov: CoverageInstance, budget: int, cap: int) -> CoverageResult:
    count = math.comb(cov.num_maps, budget)
    if count > cap:
        raise CapExceeded(f"{count} subsets of size {budget} exceed the subset cap {cap}")
    subsets = list(itertools.combinations(range(cov.num_maps), budget))
    chunk = max(1, len(subsets) // max(1, get_settings().threads))

    def best_in(start: int) -> Tuple[float, Tuple[int, ...]]:
        best = (-1.0, ())
        for subset in subsets[start:start + chunk]:
            value = cov.value(subset)
            if value > best[0]:
                best = (value, subset)
        return best

    value, chosen = max(parallel_map(best_in, range(0, len(subsets), chunk)), key=lambda b: b[0])
    return CoverageResult(tuple(chosen), value, "exact")


def _greedy(cov: CoverageInstance, budget: int) -> CoverageResult:
    chosen: List[int] = []
    covered = np.zeros(len(cov.weights))
    for _ in range(budget):
        gains = cov.weights @ (np.maximum(cov.win, covered[:, None]) - covered[:, None])
        gains[chosen] = -1.0
        best = int(np.argmax(gains))
        if gains[best] <= 0 and chosen:
            break
        chosen.append(best)
        covered = np.maximum(covered, cov.win[:, best])
    return CoverageResult(tuple(chosen), float(cov.weights @ covered), "greedy")


def optimal_classical_advice(cov: CoverageInstance, S: int, method: str = "exact",
                             cap: Optional[int] = None) -> CoverageResult:
    """
    Best choice of at most 2^S response maps.

    Args:
        cov: Coverage instance.
        S: Advice bits.
        method: ``exact`` (all subsets of size min(2^S, #maps)) or ``greedy``
            (within 1 - 1/e of exact).
        cap: Subset limit for exact search (``QROM_SUBSET_CAP``).

    Returns:
        The chosen map indices and sum_H w_H max_chosen w[H][map].
    """
    if S < 0:
        raise ConfigError("Advice length must be non-negative")
    budget = min(2**S, cov.num_maps)
    if method == "exact":
        return _exact(cov, budget, get_settings().subset_cap if cap is None else cap)
    if method == "greedy":
        return _greedy(cov, budget)
    raise ConfigError(f"Unknown coverage method {method!r}")


def best_classical_advice(cov: CoverageInstance, S: int) -> CoverageResult:
    """Exact when the subset cap allows, greedy otherwise."""
    try:
        return optimal_classical_advice(cov, S, "exact")
    except CapExceeded as e:
        logger.warning(f"{e}; falling back to greedy coverage")
        return optimal_classical_advice(cov, S, "greedy")


def lookup_strategy(cov: CoverageInstance, chosen: Sequence[int],
                    game: GameSpec) -> Tuple[StrategyCircuit, RegisterLayout]:
    """
    A zero-query strategy whose advice basis state a answers with map chosen[a].

    The program for challenge ch is the permutation
    |a, y> -> |a, (y + index(map_a(ch))) mod |A|>.

    Returns:
        The circuit and its layout (advice register "adv", answer register "ans").
    """
    if not cov.challenges:
        raise ConfigError("Lookup strategies need a coverage instance over response maps")
    d, n_ans = len(chosen), len(game.answer_space)
    layout = RegisterLayout.build([("adv", d), ("ans", n_ans)], ["adv"], "ans")
    programs = {}
    for i, ch in enumerate(cov.challenges):
        perm = np.zeros((d * n_ans, d * n_ans))
        for a, j in enumerate(chosen):
            shift = game.answer_index(cov.labels[j][i])
            for y in range(n_ans):
                perm[a * n_ans + (y + shift) % n_ans, a * n_ans + y] = 1.0
        programs[challenge_key(ch)] = (LocalUnitary(perm, ("adv", "ans")),)
    return StrategyCircuit(programs), layout


def quantum_vs_classical_report(game: GameSpec, strat: StrategyCircuit, ensemble: OracleEnsemble,
                                layout: RegisterLayout, S: int) -> Dict[str, Any]:
    """
    Optimal S-qubit advice for a fixed strategy against S-bit classical advice.

    The classical side reads out advice basis states through the same
    strategy, so the gap is never negative; ``classical_unrestricted_value``
    additionally reports the best choice among all response maps when they
    can be enumerated.
    """
    if layout.advice_dimension > 2**S:
        raise DimensionMismatch(
            f"Advice dimension {layout.advice_dimension} needs more than S={S} qubits"
        )
    quantum = optimal_nonuniform_value(game, strat, ensemble, layout)
    classical = best_classical_advice(readout_coverage_instance(game, strat, ensemble, layout), S)
    try:
        unrestricted = best_classical_advice(build_coverage_instance(game, ensemble), S).value
    except CapExceeded as e:
        logger.warning(f"Skipping unrestricted classical advice: {e}")
        unrestricted = float("nan")
    return {
        "S": S,
        "quantum_value": quantum,
        "classical_value": classical.value,
        "gap": quantum - classical.value,
        "classical_unrestricted_value": unrestricted,
        "classical_method": classical.method,
    }


@dataclass(frozen=True)
class FixingRegimeCheck:
    best_value: float
    good_count: int
    bound: float

    @property
    def holds(self) -> bool:
        return self.best_value <= self.bound + 1e-12


def fixing_regime_check(code: YzCode, fixing: ClassicalFixing, zeta: float) -> FixingRegimeCheck:
    """
    Best zero-query inversion given a fixing, against the counting bound.

    Oracle points outside the fixing stay uniformly random, so a codeword c
    maps to y with probability prod_i [fixed and matching, or 1/2 if free].
    The Good set uses S_i = {c : (i, c) is fixed}.

    Args:
        code: YZ code.
        fixing: Fixed points of the YZ oracle, index i * |Sigma| + c.
        zeta: Mismatch slack.

    Returns:
        Exact best value, |Good| and L/2^n + 2^{-zeta n} with L = |Good|.
    """
    n, sigma = code.n, code.alphabet_size
    fixing.check(n * sigma, 2)
    fixed = dict(fixing.points)
    best_total = 0.0
    for y in range(2**n):
        bits = yz_bits(y, n)
        best = 0.0
        for word in code.codewords:
            p = 1.0
            for i, (c, bit) in enumerate(zip(word, bits)):
                value = fixed.get(i * sigma + c)
                p *= 0.5 if value is None else float(value == bit)
            best = max(best, p)
        best_total += best
    lists = tuple(
        frozenset(c for c in range(sigma) if i * sigma + c in fixed) for i in range(n)
    )
    _, count = good_set(ListRecoveryInstance(code, lists, zeta))
    return FixingRegimeCheck(best_total / 2**n, count, counting_bound(count, n, zeta))
