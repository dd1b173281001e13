"""
Random micro instances and the identity checks run over them.

Every instance is small enough for exact enumeration: an OWF or PRG game
with N, M in {2, 3}, the exhaustive oracle ensemble, a state space of at
most 64 dimensions and a one-query strategy built from Haar-random
unitaries around a single oracle call.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import unitary_group

from .adversary import (
    AdviceFamily,
    AdviceKind,
    LocalUnitary,
    OracleCall,
    RegisterLayout,
    StrategyCircuit,
    challenge_key,
    start_branches,
)
from .altmeas import (
    ControlledProjection,
    closed_form_winprob,
    conditional_probs,
    evolve_exact,
    leftover_state_fidelity,
    run_alternating,
    uniform_joint,
)
from .bfqrom import build_prefix_from_altmeas, run_bf_game
from .bounds import (
    WeightedValues,
    doubling_inequality,
    jensen_bound,
    moment_ratio_sequence,
    reweight_check,
)
from .errors import ConfigError
from .game import GameSpec, owf_game, prg_game
from .oracle import OracleEnsemble, enumerate_oracles
from .spectral import (
    compressed_operator,
    decompose,
    game_povm,
    maximally_mixed_decomposition,
    optimal_advice,
    per_oracle_spectra,
    success_probability,
)

logger = logging.getLogger(__name__)

MAX_SUITE_DIMENSION = 64


@dataclass(frozen=True)
class MicroInstance:
    label: str
    game: GameSpec
    ensemble: OracleEnsemble
    strat: StrategyCircuit
    layout: RegisterLayout
    adv: AdviceFamily


def _random_unit(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_strategy(game: GameSpec, layout: RegisterLayout,
                    rng: np.random.Generator) -> StrategyCircuit:
    """U_2 . O_H . U_1 per challenge, with Haar-random U_1, U_2 on every register."""
    labels = layout.labels
    D = layout.total_dimension
    programs = {}
    for ch in range(game.oracle_range):
        programs[challenge_key(ch)] = (
            LocalUnitary(unitary_group.rvs(D, random_state=rng), labels),
            OracleCall("x", "y"),
            LocalUnitary(unitary_group.rvs(D, random_state=rng), labels),
        )
    return StrategyCircuit(programs)


def micro_instance(seed: int, advice_qubits: int = 0, explicit: Optional[bool] = None) -> MicroInstance:
    """
    One random instance.

    Args:
        seed: Seed for the game shape, strategy and advice.
        advice_qubits: 0 makes the answer register the advice; s > 0 adds a
            separate 2^s-dimensional advice register and fixes N = M = 2.
        explicit: Force Explicit (True) or Uniform (False) advice; random when None.

    Returns:
        The instance.
    """
    rng = np.random.default_rng(seed)
    if advice_qubits:
        N = M = 2
    else:
        N, M = (int(v) for v in rng.integers(2, 4, size=2))
    game = owf_game(N, M) if rng.random() < 0.5 else prg_game(N, M)
    registers = [("ans", len(game.answer_space)), ("x", N), ("y", M)]
    advice = ["ans"]
    if advice_qubits:
        registers.insert(0, ("adv", 2**advice_qubits))
        advice = ["adv"]
    layout = RegisterLayout.build(registers, advice, "ans")
    if layout.total_dimension > MAX_SUITE_DIMENSION:
        raise ConfigError(f"Micro instance dimension {layout.total_dimension} is too large")

    ensemble = enumerate_oracles(N, M)
    strat = random_strategy(game, layout, rng)
    if explicit is None:
        explicit = bool(rng.random() < 0.75)
    if explicit:
        adv = AdviceFamily.explicit(
            {H: _random_unit(rng, layout.advice_dimension) for H in ensemble.tables}
        )
    else:
        adv = AdviceFamily.uniform()
    label = f"{game.name}[N={N},M={M}]#{seed}"
    return MicroInstance(label, game, ensemble, strat, layout, adv)


def micro_suite(count: int, seed: int = 0, advice_qubits: int = 0) -> List[MicroInstance]:
    """``count`` instances seeded seed, seed + 1, ..."""
    return [micro_instance(seed + i, advice_qubits) for i in range(count)]


def _row(check: str, inst: MicroInstance, value: float, reference: float, tol: float,
         passed: Optional[bool] = None, **extra: Any) -> Dict[str, Any]:
    residual = abs(value - reference)
    return {
        "check": check,
        "instance": inst.label,
        "value": value,
        "reference": reference,
        "residual": residual,
        "passed": bool(residual <= tol if passed is None else passed),
        **extra,
    }


def check_moment_identity(inst: MicroInstance, k_max: int = 6, tol: float = 1e-9) -> List[Dict[str, Any]]:
    spectra = per_oracle_spectra(inst.adv, inst.strat, inst.game, inst.ensemble, inst.layout)
    return [
        _row("moment-identity", inst,
             run_alternating(inst.adv, inst.strat, inst.game, inst.ensemble, inst.layout, k).win_probability,
             closed_form_winprob(spectra, k), tol, k=k)
        for k in range(1, k_max + 1)
    ]


def check_leftover_law(inst: MicroInstance, k_max: int = 6, tol: float = 1e-9) -> List[Dict[str, Any]]:
    """Worst fidelity over oracles of the k-round post-state with its spectral prediction."""
    rows = []
    cps = [ControlledProjection(inst.game, H, inst.strat, inst.layout) for H in inst.ensemble.tables]
    for k in range(1, k_max + 1):
        worst = 1.0
        for H, cp in zip(inst.ensemble.tables, cps):
            P = game_povm(inst.game, H, inst.strat, inst.layout)
            for _, start in start_branches(inst.adv, inst.layout, H):
                post = evolve_exact(cp, uniform_joint(start, inst.game.num_coins), k)
                worst = min(worst, leftover_state_fidelity(cp, decompose(P, start), post, k))
        rows.append(_row("leftover-law", inst, worst, 1.0, tol, k=k))
    return rows


def check_conditional_monotonicity(inst: MicroInstance, t_max: int = 8,
                                   tol: float = 1e-12) -> List[Dict[str, Any]]:
    spectra = per_oracle_spectra(inst.adv, inst.strat, inst.game, inst.ensemble, inst.layout)
    seq = conditional_probs(spectra, t_max).values
    drops = [seq[i] - seq[i + 1] for i in range(len(seq) - 1)]
    worst = max(drops, default=0.0)
    return [_row("conditional-monotonicity", inst, worst, 0.0, tol, passed=worst <= tol,
                 t_max=len(seq))]


def check_jensen_step(inst: MicroInstance, k_max: int = 8, tol: float = 1e-12) -> List[Dict[str, Any]]:
    spectra = per_oracle_spectra(inst.adv, inst.strat, inst.game, inst.ensemble, inst.layout)
    value = success_probability(inst.adv, inst.strat, inst.game, inst.ensemble, inst.layout)
    rows = []
    for k in range(1, k_max + 1):
        root = closed_form_winprob(spectra, k) ** (1.0 / k)
        rows.append(_row("jensen-step", inst, value, root, tol, passed=value <= root + tol, k=k))
    return rows


def check_reduction_equality(inst: MicroInstance, ks: Sequence[int] = (1, 3, 5),
                             tol: float = 1e-9) -> List[Dict[str, Any]]:
    spectra = per_oracle_spectra(inst.adv, inst.strat, inst.game, inst.ensemble, inst.layout)
    seq = conditional_probs(spectra, max(ks))
    rows = []
    for k in ks:
        if k > len(seq):
            continue
        bf = build_prefix_from_altmeas(inst.adv, inst.strat, inst.game, inst.layout, k)
        result = run_bf_game(bf, inst.game, inst.ensemble)
        rows.append(_row("reduction-equality", inst, result.conditional, seq.epsilon(k), tol, k=k))
    return rows


def check_advice_guessing(inst: MicroInstance, tol: float = 1e-12) -> List[Dict[str, Any]]:
    """Maximally mixed advice keeps at least a 1/d_S share of the Explicit value."""
    mixed = AdviceFamily.maximally_mixed(inst.adv)
    explicit_value = success_probability(inst.adv, inst.strat, inst.game, inst.ensemble, inst.layout)
    mixed_value = success_probability(mixed, inst.strat, inst.game, inst.ensemble, inst.layout)
    d = inst.layout.advice_dimension
    residual = 0.0
    rest_ok = True
    for H in inst.ensemble.tables:
        Q = compressed_operator(game_povm(inst.game, H, inst.strat, inst.layout), inst.layout)
        sigma = inst.adv.vector(H, d) if inst.adv.kind is AdviceKind.EXPLICIT else optimal_advice(Q)[0]
        identity = maximally_mixed_decomposition(Q, sigma)
        residual = max(residual, identity.residual)
        rest_ok = rest_ok and identity.rest_value >= -tol
    return [
        _row("advice-guessing", inst, mixed_value, explicit_value / d, tol,
             passed=mixed_value >= explicit_value / d - tol and residual <= tol and rest_ok,
             advice_dimension=d),
    ]


def check_helper_lemmas(samples: int = 1000, seed: int = 0) -> List[Dict[str, Any]]:
    """Reweighting, moment-ratio and Jensen inequalities on random distributions."""
    rng = np.random.default_rng(seed)
    failures = {"reweight": 0, "moment-ratio": 0, "jensen": 0}
    for _ in range(samples):
        n = int(rng.integers(1, 8))
        cp = WeightedValues.normalized(rng.random(n) + 1e-3, rng.random(n))
        if cp.moment(1) <= 0:
            continue
        mu, reweighted = reweight_check(cp)
        failures["reweight"] += reweighted < mu - 1e-12
        ratios = moment_ratio_sequence(cp, 6)
        failures["moment-ratio"] += any(b < a - 1e-12 for a, b in zip(ratios, ratios[1:]))
        mean, root = jensen_bound(cp, float(rng.uniform(1, 6)))
        failures["jensen"] += mean > root + 1e-12
    rows = [
        {"check": f"helper-{name}", "instance": f"random[{samples}]", "value": float(count),
         "reference": 0.0, "residual": float(count), "passed": count == 0}
        for name, count in failures.items()
    ]
    doubling = doubling_inequality(np.linspace(0.01, 1.0, 100))
    rows.append({"check": "helper-doubling", "instance": "gamma-grid[100]",
                 "value": float(doubling["power"].min()), "reference": 2.0,
                 "residual": 0.0, "passed": bool(doubling["holds"].all())})
    return rows


INSTANCE_CHECKS: Dict[str, Callable[[MicroInstance], List[Dict[str, Any]]]] = {
    "moment-identity": check_moment_identity,
    "leftover-law": check_leftover_law,
    "conditional-monotonicity": check_conditional_monotonicity,
    "jensen-step": check_jensen_step,
    "reduction-equality": check_reduction_equality,
}


def verify_lemmas(count: int = 20, seed: int = 0, advice_qubits: Sequence[int] = (1, 2, 3),
                  helper_samples: int = 1000) -> pd.DataFrame:
    """
    Run every identity check over a fresh suite.

    Args:
        count: Instances in the main suite.
        seed: Base seed.
        advice_qubits: Advice sizes for the advice-guessing instances.
        helper_samples: Random distributions for the scalar inequalities.

    Returns:
        One row per (check, instance, k) with a ``passed`` column.
    """
    rows: List[Dict[str, Any]] = []
    for inst in micro_suite(count, seed):
        for name, check in INSTANCE_CHECKS.items():
            rows.extend(check(inst))
        logger.debug(f"Checked {inst.label}")
    for s in advice_qubits:
        inst = micro_instance(seed + 1000 + s, advice_qubits=s, explicit=True)
        rows.extend(check_advice_guessing(inst))
    rows.extend(check_helper_lemmas(helper_samples, seed))
    frame = pd.DataFrame(rows)
    failed = int((~frame["passed"]).sum())
    logger.info(f"verify-lemmas: {len(frame)} checks, {failed} failed")
    return frame
