"""
Alternating-measurement games.

The adversary's start state is paired with a coin register in uniform
superposition |1_R> = |R|^{-1/2} sum_r |r>. Odd rounds measure the
controlled projection CP = {sum_r |r><r| (x) P^H_r, its complement}, even
rounds measure IsUniform = {|1_R><1_R| (x) I, its complement}; the game is
won when every outcome is 0. Its value is the k-th moment
sum_H w_H sum_i |alpha_i|^2 p_i^k of the game POVM spectrum.

Joint states over R (x) A are stored as (|R|, D) arrays whose row r is the
A-register amplitude vector paired with |r>.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from .adversary import (
    AdviceFamily,
    RegisterLayout,
    StrategyCircuit,
    QueryTally,
    challenge_key,
    check_layout,
    start_branches,
)
from .config import get_settings, parallel_map
from .errors import (
    CapExceeded,
    ConfigError,
    DegenerateEigenvalue,
    DimensionMismatch,
    ZeroSuccess,
)
from .game import GameSpec
from .oracle import CountingOracle, OracleEnsemble, OracleTable
from .spectral import OracleSpectrum, SpectralData, per_oracle_spectra

logger = logging.getLogger(__name__)

DENOMINATOR_TOL = 1e-14
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class JointState:
    amplitudes: np.ndarray

    @property
    def num_coins(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "JointState":
        norm = math.sqrt(self.norm_sq)
        if norm == 0.0:
            raise ZeroSuccess("Cannot normalize the zero state")
        return JointState(self.amplitudes / norm)

    def inner(self, other: "JointState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def reduced_advice_state(self) -> np.ndarray:
        """rho_A = sum_r psi_r psi_r^dagger, trace equal to norm_sq."""
        return self.amplitudes.T @ self.amplitudes.conj()

    def __add__(self, other: "JointState") -> "JointState":
        return JointState(self.amplitudes + other.amplitudes)

    def __sub__(self, other: "JointState") -> "JointState":
        return JointState(self.amplitudes - other.amplitudes)

    def __rmul__(self, scalar: complex) -> "JointState":
        return JointState(scalar * self.amplitudes)


def uniform_joint(start: np.ndarray, num_coins: int) -> JointState:
    """|1_R> (x) start."""
    start = np.asarray(start, dtype=complex)
    return JointState(np.tile(start / math.sqrt(num_coins), (num_coins, 1)))


class ControlledProjection:
    """
    CP for one oracle, applied coin-blockwise: for each r run the strategy
    for Samp^H(r), multiply by the win diagonal, and run the strategy back.
    """

    def __init__(self, game: GameSpec, H: OracleTable, strat: StrategyCircuit,
                 layout: RegisterLayout):
        check_layout(game, layout)
        layout.check_capacity(get_settings().max_dimension)
        self.game = game
        self.H = H
        self.layout = layout
        self.dimension = layout.total_dimension

        answers = layout.answer_values()
        groups: Dict[str, List[int]] = {}
        unitaries: Dict[str, np.ndarray] = {}
        strat_calls: Dict[str, int] = {}
        diagonals = np.empty((game.num_coins, self.dimension))
        costs: List[int] = []
        for i, r in enumerate(game.coin_space):
            counter = CountingOracle(H)
            ch = game.samp(counter, r)
            samp_calls = counter.reset()
            wins = []
            verify_calls = 0
            for a in range(len(game.answer_space)):
                wins.append(game.verify(counter, r, game.answer_value(a)) == 0)
                verify_calls = max(verify_calls, counter.reset())
            diagonals[i] = np.asarray(wins, dtype=float)[answers]

            key = challenge_key(ch)
            if key not in unitaries:
                tally = QueryTally()
                unitaries[key] = strat.apply(
                    ch, H, np.eye(self.dimension, dtype=complex), layout, tally=tally
                )
                strat_calls[key] = tally.calls
            groups.setdefault(key, []).append(i)
            costs.append(2 * samp_calls + 2 * strat_calls[key] + verify_calls)

        self._groups = [(unitaries[k], np.array(rows)) for k, rows in groups.items()]
        self._diagonals = diagonals
        self.query_cost = max(costs)
        self.declared_cost = max(
            2 * game.t_samp + 2 * strat.calls_for(game.challenge(H, r)) + game.t_verify
            for r in game.coin_space
        )

    def project(self, joint: JointState, branch: int = 0) -> JointState:
        """
        Apply CP_0 (branch 0) or CP_1 = I - CP_0 (branch 1).

        Returns:
            The sub-normalized projected state.
        """
        psi = joint.amplitudes
        if psi.shape != (self.game.num_coins, self.dimension):
            raise DimensionMismatch(
                f"Joint state has shape {psi.shape}, expected "
                f"({self.game.num_coins}, {self.dimension})"
            )
        out = np.empty_like(psi)
        for U, rows in self._groups:
            rotated = U @ psi[rows].T
            rotated *= self._diagonals[rows].T
            out[rows] = (U.conj().T @ rotated).T
        return JointState(out if branch == 0 else psi - out)


def cp_project(game: GameSpec, H: OracleTable, strat: StrategyCircuit, layout: RegisterLayout,
               joint: JointState, branch: int = 0) -> JointState:
    return ControlledProjection(game, H, strat, layout).project(joint, branch)


def isuniform_project(joint: JointState, branch: int = 0) -> JointState:
    """Branch 0 replaces every row by the row mean; branch 1 keeps the rest."""
    psi = joint.amplitudes
    mean = np.broadcast_to(psi.mean(axis=0), psi.shape)
    return JointState(mean.copy() if branch == 0 else psi - mean)


@dataclass(frozen=True)
class Exact:
    """Sub-normalized evolution; the final squared norm is the win probability."""


@dataclass(frozen=True)
class Trajectory:
    """Born-rule sampling of every outcome with renormalization."""

    seed: int = 0
    samples: int = 10_000
    keep_states: bool = False


AltMode = Union[Exact, Trajectory]


@dataclass(frozen=True)
class AltMeasTranscript:
    oracle_index: int
    weight: float
    outcomes: Tuple[int, ...]
    mode: AltMode
    win_probability: Optional[float]
    post_state: Optional[JointState]

    @property
    def won(self) -> bool:
        return not any(self.outcomes)


@dataclass(frozen=True)
class AltMeasResult:
    transcripts: Tuple[AltMeasTranscript, ...]
    win_probability: float
    log_win_probability: float
    stderr: float = 0.0


def evolve_exact(cp: ControlledProjection, joint: JointState, rounds: int) -> JointState:
    for i in range(1, rounds + 1):
        joint = cp.project(joint, 0) if i % 2 else isuniform_project(joint, 0)
    return joint


def _check_rounds(k: int, exact: bool) -> None:
    if k < 0:
        raise ConfigError(f"Round count must be non-negative, got {k}")
    cap = get_settings().max_rounds
    if exact and k > cap:
        raise CapExceeded(f"{k} rounds exceed the exact-mode cap {cap}")


def run_alternating(adv: AdviceFamily, strat: StrategyCircuit, game: GameSpec,
                    ensemble: OracleEnsemble, layout: RegisterLayout, k: int,
                    mode: Optional[AltMode] = None) -> AltMeasResult:
    """
    Play the k-round alternating-measurement game.

    Args:
        adv: Advice family.
        strat: Strategy circuit.
        game: The game.
        ensemble: Oracle ensemble.
        layout: Register layout.
        k: Number of rounds (at least 1).
        mode: Exact (default) or Trajectory.

    Returns:
        Per-oracle transcripts and the ensemble-averaged win probability.
    """
    if k < 1:
        raise ConfigError("The alternating game needs at least one round")
    mode = mode or Exact()
    _check_rounds(k, isinstance(mode, Exact))
    if isinstance(mode, Trajectory):
        return _run_trajectories(adv, strat, game, ensemble, layout, k, mode)

    def per_oracle(item: Tuple[int, OracleTable]) -> List[AltMeasTranscript]:
        index, H = item
        cp = ControlledProjection(game, H, strat, layout)
        out = []
        for w_b, start in start_branches(adv, layout, H):
            post = evolve_exact(cp, uniform_joint(start, game.num_coins), k)
            out.append(AltMeasTranscript(
                index, ensemble.weights[index] * w_b, (0,) * k, mode, post.norm_sq, post
            ))
        return out

    transcripts = [t for group in parallel_map(per_oracle, list(enumerate(ensemble.tables)))
                   for t in group]
    probs = np.array([t.win_probability for t in transcripts])
    weights = np.array([t.weight for t in transcripts])
    value = float(np.dot(weights, probs))
    with np.errstate(divide="ignore"):
        log_value = float(logsumexp(np.log(probs), b=weights)) if value > 0 else -math.inf
    logger.debug(f"Exact alternating game, k={k}: {value:.6g} over {len(ensemble)} oracles")
    return AltMeasResult(tuple(transcripts), value, log_value)


def _run_trajectories(adv: AdviceFamily, strat: StrategyCircuit, game: GameSpec,
                      ensemble: OracleEnsemble, layout: RegisterLayout, k: int,
                      mode: Trajectory) -> AltMeasResult:
    rng = np.random.default_rng(mode.seed)
    cps: Dict[int, ControlledProjection] = {}
    transcripts = []
    wins = 0
    for _ in range(mode.samples):
        index = int(rng.choice(len(ensemble), p=np.asarray(ensemble.weights)))
        H = ensemble.tables[index]
        if index not in cps:
            cps[index] = ControlledProjection(game, H, strat, layout)
        branches = start_branches(adv, layout, H)
        b = int(rng.choice(len(branches), p=[w for w, _ in branches])) if len(branches) > 1 else 0
        joint = uniform_joint(branches[b][1], game.num_coins)
        outcomes = []
        for i in range(1, k + 1):
            accept = cps[index].project(joint, 0) if i % 2 else isuniform_project(joint, 0)
            p0 = accept.norm_sq / joint.norm_sq
            bit = 0 if rng.random() < p0 else 1
            outcomes.append(bit)
            joint = (accept if bit == 0 else joint - accept).normalized()
        won = not any(outcomes)
        wins += won
        transcripts.append(AltMeasTranscript(
            index, 1.0 / mode.samples, tuple(outcomes), mode, None,
            joint if mode.keep_states else None,
        ))
    p = wins / mode.samples
    log_p = math.log(p) if p > 0 else -math.inf
    return AltMeasResult(tuple(transcripts), p, log_p, math.sqrt(p * (1 - p) / mode.samples))


def closed_form_winprob(spectra: Sequence[OracleSpectrum], k: int) -> float:
    """sum_H w_H sum_i |alpha_i|^2 p_i^k; exactly 1 for k = 0."""
    if k < 0:
        raise ConfigError(f"Moment order must be non-negative, got {k}")
    if k == 0:
        return 1.0
    return float(math.fsum(s.weight * s.data.moment(k) for s in spectra))


@dataclass(frozen=True)
class ConditionalSequence:
    """
    epsilon^(1), ..., epsilon^(t) where epsilon^(t) is the win probability of
    round t given that rounds 1..t-1 were all won. ``truncated_at`` is the
    first t whose conditioning event has (numerically) zero probability.
    """

    values: Tuple[float, ...]
    truncated_at: Optional[int] = None

    def epsilon(self, t: int) -> float:
        return self.values[t - 1]

    def __len__(self) -> int:
        return len(self.values)


def conditional_probs(spectra: Sequence[OracleSpectrum], k_max: int) -> ConditionalSequence:
    moments = [closed_form_winprob(spectra, t) for t in range(k_max + 1)]
    if k_max >= 1 and moments[1] <= DENOMINATOR_TOL:
        raise ZeroSuccess("The first round is never won")
    values: List[float] = []
    for t in range(1, k_max + 1):
        if moments[t - 1] <= DENOMINATOR_TOL:
            logger.warning(f"Conditional sequence truncated at t={t}: conditioning has probability 0")
            return ConditionalSequence(tuple(values), truncated_at=t)
        values.append(moments[t] / moments[t - 1])
    return ConditionalSequence(tuple(values))


def conditional_frame(spectra: Sequence[OracleSpectrum], k_max: int) -> pd.DataFrame:
    """(oracle_index, t, epsilon) rows per oracle and for the whole ensemble (index -1)."""
    rows = []
    by_oracle: Dict[int, List[OracleSpectrum]] = {}
    for s in spectra:
        by_oracle.setdefault(s.oracle_index, []).append(s)
    groups = [(i, [OracleSpectrum(i, s.weight / sum(x.weight for x in g), s.data) for s in g])
              for i, g in sorted(by_oracle.items())]
    groups.append((-1, list(spectra)))
    for index, group in groups:
        try:
            seq = conditional_probs(group, k_max)
        except ZeroSuccess:
            continue
        rows.extend({"oracle_index": index, "t": t, "epsilon": e}
                    for t, e in enumerate(seq.values, start=1))
    return pd.DataFrame(rows, columns=["oracle_index", "t", "epsilon"])


@dataclass(frozen=True)
class MwStateFamily:
    """
    The states v0 = |1_R>|phi>, w0 = CP_0 v0 / sqrt(p) and their
    complements v1 = IsUniform_1 w0 / sqrt(1-p), w1 = CP_1 v0 / sqrt(1-p).
    """

    eigenvalue: float
    v0: JointState
    w0: Optional[JointState]
    v1: Optional[JointState]
    w1: Optional[JointState]
    residuals: Dict[str, float]

    def passes(self, tol: float = 1e-9) -> bool:
        return all(r <= tol for r in self.residuals.values())


def _dist(a: JointState, b: JointState) -> float:
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))


def mw_state_family(cp: ControlledProjection, phi: np.ndarray, p: float,
                    strict: bool = False) -> MwStateFamily:
    """
    Build and check the two-dimensional invariant subspace of an eigenvector.

    Args:
        cp: Controlled projection of the oracle the eigenvector belongs to.
        phi: Unit eigenvector of P_H.
        p: Its eigenvalue.
        strict: Raise DegenerateEigenvalue when p is 0 or 1 instead of
            returning only the defined states.

    Returns:
        The states and named residuals of every identity they satisfy.
    """
    phi = np.asarray(phi, dtype=complex)
    R = cp.game.num_coins
    low, high = p <= DEGENERATE_TOL, p >= 1 - DEGENERATE_TOL
    if strict and (low or high):
        raise DegenerateEigenvalue(f"Eigenvalue {p} leaves part of the state family undefined")

    v0 = uniform_joint(phi, R)
    cp_v0 = cp.project(v0, 0)
    res = {
        "norm_v0": abs(math.sqrt(v0.norm_sq) - 1.0),
        "isuniform_fixes_v0": _dist(isuniform_project(v0, 0), v0),
    }
    w0 = v1 = w1 = None
    if not low:
        w0 = (1 / math.sqrt(p)) * cp_v0
        res["norm_w0"] = abs(math.sqrt(w0.norm_sq) - 1.0)
        res["cp0_fixes_w0"] = _dist(cp.project(w0, 0), w0)
        res["cp1_kills_w0"] = math.sqrt(cp.project(w0, 1).norm_sq)
        if high:
            res["w0_equals_v0"] = _dist(w0, v0)
    if not high:
        w1 = (1 / math.sqrt(1 - p)) * cp.project(v0, 1)
        res["norm_w1"] = abs(math.sqrt(w1.norm_sq) - 1.0)
        if w0 is not None:
            v1 = (1 / math.sqrt(1 - p)) * isuniform_project(w0, 1)
            res["norm_v1"] = abs(math.sqrt(v1.norm_sq) - 1.0)
            res["relation_w0"] = _dist(w0, math.sqrt(p) * v0 + math.sqrt(1 - p) * v1)
            res["relation_v0"] = _dist(v0, math.sqrt(p) * w0 + math.sqrt(1 - p) * w1)
            res["overlap_w0_w1"] = abs(w0.inner(w1))
    return MwStateFamily(p, v0, w0, v1, w1, res)


def expected_leftover(cp: ControlledProjection, spectral: SpectralData, k: int) -> JointState:
    """
    sum_i alpha_i p_i^{k/2} (v0_i for even k, w0_i for odd k), built from the
    eigenspace components of the start state.
    """
    R = cp.game.num_coins
    total = JointState(np.zeros((R, cp.dimension), dtype=complex))
    for p, component in zip(spectral.eigenvalues, spectral.components):
        if k % 2 == 0:
            total = total + (p ** (k // 2)) * uniform_joint(component, R)
        elif p > 0:
            total = total + (p ** ((k - 1) // 2)) * cp.project(uniform_joint(component, R), 0)
    return total


def leftover_state_fidelity(cp: ControlledProjection, spectral: SpectralData,
                            post_state: JointState, k: int) -> float:
    """Fidelity of the k-round post-state with the state predicted from the spectrum."""
    expected = expected_leftover(cp, spectral, k)
    a, b = expected.norm_sq, post_state.norm_sq
    if a <= DENOMINATOR_TOL and b <= DENOMINATOR_TOL:
        return 1.0
    if a <= DENOMINATOR_TOL or b <= DENOMINATOR_TOL:
        return 0.0
    return abs(expected.inner(post_state)) ** 2 / (a * b)


def sweep_frame(adv: AdviceFamily, strat: StrategyCircuit, game: GameSpec,
                ensemble: OracleEnsemble, layout: RegisterLayout, k_max: int,
                samples: int = 0, seed: int = 0) -> pd.DataFrame:
    """(k, exact_winprob, closed_form, trajectory_estimate, stderr) for k = 1..k_max."""
    spectra = per_oracle_spectra(adv, strat, game, ensemble, layout)
    rows = []
    for k in range(1, k_max + 1):
        exact = run_alternating(adv, strat, game, ensemble, layout, k)
        row = {
            "k": k,
            "exact_winprob": exact.win_probability,
            "log_winprob": exact.log_win_probability,
            "closed_form": closed_form_winprob(spectra, k),
            "trajectory_estimate": np.nan,
            "stderr": np.nan,
        }
        if samples:
            traj = run_alternating(adv, strat, game, ensemble, layout, k,
                                   Trajectory(seed=seed + k, samples=samples))
            row["trajectory_estimate"] = traj.win_probability
            row["stderr"] = traj.stderr
        rows.append(row)
    return pd.DataFrame(rows)
