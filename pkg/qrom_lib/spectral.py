"""
Game POVMs and their spectra.

For a fixed oracle H, the probability that an adversary with start state
|s> wins is <s|P_H|s>, where P_H averages over coins r the win projector
V^H_r conjugated by the strategy unitary for the challenge Samp^H(r). This
module builds P_H densely, decomposes it into eigenspaces, and optimizes
the advice state against the part of P_H it can reach.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from .adversary import (
    AdviceFamily,
    RegisterLayout,
    StrategyCircuit,
    challenge_key,
    check_layout,
    start_branches,
)
from .config import get_settings, parallel_map
from .errors import ConfigError, EigensolverFailure
from .game import Coin, GameSpec
from .oracle import OracleEnsemble, OracleTable

logger = logging.getLogger(__name__)

CLUSTER_TOL = 1e-9
CLAMP_WARN_TOL = 1e-9


@dataclass(frozen=True)
class WinProjector:
    """V^H_r, stored by its computational-basis diagonal."""

    coin: Coin
    diagonal: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal.astype(complex))


@dataclass(frozen=True)
class GamePovm:
    matrix: np.ndarray
    per_coin: Optional[Tuple[np.ndarray, ...]] = None

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectralData:
    """
    Eigenspaces of a game POVM and the weight a start state puts on each.

    ``components[i]`` is the projection of the start state onto eigenspace
    i, so ``overlaps[i]`` is its squared norm.
    """

    eigenvalues: np.ndarray
    projectors: Tuple[np.ndarray, ...]
    overlaps: np.ndarray
    components: Tuple[np.ndarray, ...]

    def reconstruct(self) -> np.ndarray:
        return sum(p * proj for p, proj in zip(self.eigenvalues, self.projectors))

    def moment(self, k: int) -> float:
        return float(np.dot(self.overlaps, self.eigenvalues ** k))


def win_projector(game: GameSpec, H: OracleTable, r: Coin, layout: RegisterLayout) -> WinProjector:
    """
    The diagonal projector onto answers that win for coin r.

    Args:
        game: The game.
        H: Oracle.
        r: Coins.
        layout: Register layout; its answer register is read out.

    Returns:
        V^H_r as a diagonal over the full register space.
    """
    check_layout(game, layout)
    game.check_coin(r)
    wins = np.array(
        [game.wins(H, r, game.answer_value(a)) for a in range(len(game.answer_space))],
        dtype=float,
    )
    return WinProjector(r, wins[layout.answer_values()])


def game_povm(game: GameSpec, H: OracleTable, strat: StrategyCircuit, layout: RegisterLayout,
              keep_per_coin: bool = False) -> GamePovm:
    """
    P_H = (1/|R|) sum_r U_ch^dagger V^H_r U_ch with ch = Samp^H(r).

    Args:
        game: The game.
        H: Oracle.
        strat: Strategy circuit.
        layout: Register layout.
        keep_per_coin: Also return every P^H_r.

    Returns:
        The POVM element.
    """
    layout.check_capacity(get_settings().max_dimension)
    unitaries: Dict[str, np.ndarray] = {}
    total = np.zeros((layout.total_dimension,) * 2, dtype=complex)
    per_coin: List[np.ndarray] = []
    for r in game.coin_space:
        ch = game.challenge(H, r)
        key = challenge_key(ch)
        if key not in unitaries:
            unitaries[key] = strat.unitary(ch, H, layout)
        U = unitaries[key]
        v = win_projector(game, H, r, layout).diagonal
        P_r = (U.conj().T * v) @ U
        total += P_r
        if keep_per_coin:
            per_coin.append(P_r)
    total /= game.num_coins
    total = (total + total.conj().T) / 2
    return GamePovm(total, tuple(per_coin) if keep_per_coin else None)


def _eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    try:
        values, vectors = linalg.eigh(matrix)
    except linalg.LinAlgError as e:
        raise EigensolverFailure(f"Hermitian eigensolver did not converge: {e}") from e
    drift = max(-values.min(initial=0.0), values.max(initial=0.0) - 1.0)
    if drift > CLAMP_WARN_TOL:
        logger.warning(f"Eigenvalues left [0, 1] by {drift:.2e}; clamping")
    return np.clip(values, 0.0, 1.0), vectors


def decompose(P: GamePovm, start: np.ndarray) -> SpectralData:
    """
    Eigendecomposition of P with eigenvalues merged within CLUSTER_TOL.

    Args:
        P: POVM element.
        start: Unit start state.

    Returns:
        Eigenspaces in descending eigenvalue order with the start state's weights.
    """
    start = np.asarray(start, dtype=complex)
    if start.shape != (P.dimension,):
        raise ConfigError(f"Start state has shape {start.shape}, POVM is {P.dimension}-dimensional")
    if abs(np.linalg.norm(start) - 1.0) > 1e-9:
        raise ConfigError("Start state is not a unit vector")
    values, vectors = _eigh(P.matrix)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]

    groups: List[List[int]] = []
    for i, p in enumerate(values):
        if groups and values[groups[-1][0]] - p <= CLUSTER_TOL:
            groups[-1].append(i)
        else:
            groups.append([i])

    eigenvalues, projectors, overlaps, components = [], [], [], []
    for group in groups:
        basis = vectors[:, group]
        coeffs = basis.conj().T @ start
        eigenvalues.append(float(values[group].mean()))
        projectors.append(basis @ basis.conj().T)
        overlaps.append(float(np.vdot(coeffs, coeffs).real))
        components.append(basis @ coeffs)
    return SpectralData(np.array(eigenvalues), tuple(projectors), np.array(overlaps), tuple(components))


def compressed_operator(P: GamePovm, layout: RegisterLayout) -> np.ndarray:
    """Q[a, b] = <a, 0_work| P |b, 0_work>, the part of P advice can reach."""
    E = layout.embed_advice(np.eye(layout.advice_dimension, dtype=complex))
    Q = E.conj().T @ P.matrix @ E
    return (Q + Q.conj().T) / 2


def optimal_advice(Q: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    The advice state maximizing <sigma|Q|sigma>.

    Returns:
        (unit top eigenvector, lambda_max)
    """
    values, vectors = _eigh(np.asarray(Q, dtype=complex))
    return vectors[:, -1], float(values[-1])


def _per_oracle(game: GameSpec, strat: StrategyCircuit, ensemble: OracleEnsemble,
                layout: RegisterLayout) -> List[np.ndarray]:
    return parallel_map(
        lambda H: compressed_operator(game_povm(game, H, strat, layout), layout), ensemble.tables
    )


def optimal_nonuniform_value(game: GameSpec, strat: StrategyCircuit, ensemble: OracleEnsemble,
                             layout: RegisterLayout) -> float:
    """E_H lambda_max(Q^H): the best Explicit advice for this strategy."""
    Qs = _per_oracle(game, strat, ensemble, layout)
    return float(sum(w * optimal_advice(Q)[1] for Q, (_, w) in zip(Qs, ensemble)))


def optimal_advice_family(game: GameSpec, strat: StrategyCircuit, ensemble: OracleEnsemble,
                          layout: RegisterLayout) -> Tuple[AdviceFamily, float]:
    """The Explicit family of per-oracle top eigenvectors and its value."""
    Qs = _per_oracle(game, strat, ensemble, layout)
    vectors, value = {}, 0.0
    for Q, (H, w) in zip(Qs, ensemble):
        sigma, lam = optimal_advice(Q)
        vectors[H.entries] = sigma / np.linalg.norm(sigma)
        value += w * lam
    return AdviceFamily.explicit(vectors), value


def success_probability(adv: AdviceFamily, strat: StrategyCircuit, game: GameSpec,
                        ensemble: OracleEnsemble, layout: RegisterLayout,
                        via_overlaps: bool = False) -> float:
    """
    Exact win probability sum_H w_H <s_H|P_H|s_H>.

    Args:
        adv: Advice family; mixed families are averaged over their branches.
        strat: Strategy circuit.
        game: The game.
        ensemble: Oracle ensemble.
        layout: Register layout.
        via_overlaps: Compute sum_i |alpha_i|^2 p_i from the spectrum instead
            of the quadratic form.

    Returns:
        Win probability.
    """

    def value(H: OracleTable) -> float:
        P = game_povm(game, H, strat, layout)
        total = 0.0
        for weight, start in start_branches(adv, layout, H):
            if via_overlaps:
                spectrum = decompose(P, start)
                total += weight * float(np.dot(spectrum.overlaps, spectrum.eigenvalues))
            else:
                total += weight * float(np.vdot(start, P.matrix @ start).real)
        return total

    values = parallel_map(value, ensemble.tables)
    return float(sum(w * v for v, w in zip(values, ensemble.weights)))


@dataclass(frozen=True)
class OracleSpectrum:
    """Spectrum of one (oracle, advice branch) pair; ``weight`` is w_H times the branch weight."""

    oracle_index: int
    weight: float
    data: SpectralData


def per_oracle_spectra(adv: AdviceFamily, strat: StrategyCircuit, game: GameSpec,
                       ensemble: OracleEnsemble, layout: RegisterLayout) -> List[OracleSpectrum]:
    def spectra(item: Tuple[int, OracleTable]) -> List[OracleSpectrum]:
        index, H = item
        P = game_povm(game, H, strat, layout)
        w_H = ensemble.weights[index]
        return [
            OracleSpectrum(index, w_H * w_b, decompose(P, start))
            for w_b, start in start_branches(adv, layout, H)
        ]

    nested = parallel_map(spectra, list(enumerate(ensemble.tables)))
    return [s for group in nested for s in group]


@dataclass(frozen=True)
class MixtureIdentity:
    """
    Value of the maximally mixed advice run split as
    (1/d_S) <sigma|Q|sigma> + (1 - 1/d_S) q.
    """

    mixed_value: float
    guessed_value: float
    rest_value: float
    advice_dimension: int

    @property
    def residual(self) -> float:
        d = self.advice_dimension
        return abs(self.mixed_value - (self.guessed_value / d + (1 - 1 / d) * self.rest_value))


def maximally_mixed_decomposition(Q: np.ndarray, sigma: np.ndarray) -> MixtureIdentity:
    """
    Advice guessing: tr(Q)/d_S against the value of the guessed advice sigma.

    Completing sigma to an orthonormal basis, the maximally mixed state is
    the uniform mixture of that basis, so q is the average of <b|Q|b> over
    the d_S - 1 other basis vectors and is non-negative.
    """
    Q = np.asarray(Q, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    d = Q.shape[0]
    mixed = float(np.trace(Q).real) / d
    guessed = float(np.vdot(sigma, Q @ sigma).real)
    rest = (mixed * d - guessed) / (d - 1) if d > 1 else 0.0
    return MixtureIdentity(mixed, guessed, rest, d)


def spectra_frame(spectra: Sequence[OracleSpectrum]) -> pd.DataFrame:
    """Long-format (oracle_index, weight, eigenvalue, overlap) rows."""
    rows = [
        {
            "oracle_index": s.oracle_index,
            "weight": s.weight,
            "eigenvalue": p,
            "overlap": a,
        }
        for s in spectra
        for p, a in zip(s.data.eigenvalues, s.data.overlaps)
    ]
    return pd.DataFrame(rows, columns=["oracle_index", "weight", "eigenvalue", "overlap"])
