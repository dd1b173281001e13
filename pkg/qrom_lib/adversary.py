"""
The (S, T) adversary model.

An adversary is a strategy circuit (one program of local gates and oracle
calls per challenge) acting on labeled registers, started from
oracle-dependent advice tensored with an all-zero workspace. T = 0
classical adversaries with S-bit advice live here too.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from .config import get_settings
from .errors import ConfigError, DimensionMismatch, StrategyError, UnknownChallenge
from .game import WIN, Answer, Challenge, Coin, GameSpec, evaluate
from .oracle import OracleEnsemble, OracleTable, oracle_unitary_step
from .registers import RegisterLayout, Subsystem

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-10
NORM_TOL = 1e-10

__all__ = [
    "AdviceFamily",
    "AdviceKind",
    "ClassicalAdversary",
    "LocalUnitary",
    "MixedStart",
    "OracleCall",
    "QueryTally",
    "RegisterLayout",
    "StrategyCircuit",
    "Subsystem",
    "apply_strategy",
    "challenge_key",
    "check_layout",
    "classical_run",
    "classical_value",
    "default_layout",
    "identity_strategy",
    "load_strategy",
    "monte_carlo_value",
    "prepare_start_state",
    "run_and_measure",
    "start_branches",
]


def _jsonable(value: Any) -> Any:
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    return value


def challenge_key(ch: Challenge) -> str:
    """Canonical program key of a challenge: its JSON text, tuples as lists."""
    return json.dumps(_jsonable(ch))


class QueryTally:
    """Counts quantum oracle calls made while applying a strategy."""

    def __init__(self) -> None:
        self.calls = 0


@dataclass(frozen=True)
class LocalUnitary:
    """A dense unitary acting on the tensor product of ``targets``."""

    matrix: np.ndarray
    targets: Tuple[str, ...]

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "targets", tuple(self.targets))
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise StrategyError(f"Gate on {self.targets} is not a square matrix")
        if len(set(self.targets)) != len(self.targets) or not self.targets:
            raise StrategyError(f"Gate targets must be distinct and non-empty: {self.targets}")
        drift = np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])).max()
        if drift > UNITARY_TOL:
            raise StrategyError(f"Gate on {self.targets} is not unitary (drift {drift:.2e})")

    def apply(self, state: np.ndarray, layout: RegisterLayout, adjoint: bool = False) -> np.ndarray:
        dims = tuple(layout.dimension(t) for t in self.targets)
        size = int(np.prod(dims))
        if size != self.matrix.shape[0]:
            raise DimensionMismatch(
                f"Gate of size {self.matrix.shape[0]} does not fit {self.targets} ({size})"
            )
        batch = state.shape[1:]
        tensor = state.reshape(layout.dims + batch)
        axes = tuple(layout.axis(t) for t in self.targets)
        moved = np.moveaxis(tensor, axes, tuple(range(len(axes))))
        rest = moved.shape[len(axes):]
        gate = self.matrix.conj().T if adjoint else self.matrix
        out = (gate @ moved.reshape(size, -1)).reshape(dims + rest)
        return np.moveaxis(out, tuple(range(len(axes))), axes).reshape(state.shape)


@dataclass(frozen=True)
class OracleCall:
    x_label: str
    y_label: str


Step = Union[LocalUnitary, OracleCall]


@dataclass(frozen=True)
class StrategyCircuit:
    """
    Per-challenge programs keyed by ``challenge_key``, plus an optional
    default program for challenges without their own entry.
    """

    programs: Mapping[str, Tuple[Step, ...]] = field(default_factory=dict)
    default: Optional[Tuple[Step, ...]] = None

    @property
    def query_count(self) -> int:
        """T: the most oracle calls any program makes."""
        programs = list(self.programs.values())
        if self.default is not None:
            programs.append(self.default)
        return max(
            (sum(isinstance(s, OracleCall) for s in p) for p in programs), default=0
        )

    def program(self, ch: Challenge) -> Tuple[Step, ...]:
        steps = self.programs.get(challenge_key(ch), self.default)
        if steps is None:
            raise UnknownChallenge(f"No program for challenge {ch!r} and no default")
        return steps

    def calls_for(self, ch: Challenge) -> int:
        return sum(isinstance(s, OracleCall) for s in self.program(ch))

    def apply(self, ch: Challenge, H: OracleTable, state: np.ndarray, layout: RegisterLayout,
              adjoint: bool = False, tally: Optional[QueryTally] = None) -> np.ndarray:
        """
        Run the program for ``ch`` on a state or a (D, B) batch of states.

        Args:
            ch: Challenge selecting the program.
            H: Oracle answering the program's oracle calls.
            state: Vector of length D or matrix of column states.
            layout: Register layout of the state.
            adjoint: Run the inverse program instead.
            tally: Optional oracle-call counter.

        Returns:
            The transformed state(s).
        """
        state = np.asarray(state, dtype=complex)
        if state.shape[0] != layout.total_dimension:
            raise DimensionMismatch(
                f"State has dimension {state.shape[0]}, layout expects {layout.total_dimension}"
            )
        steps = self.program(ch)
        for step in reversed(steps) if adjoint else steps:
            if isinstance(step, OracleCall):
                state = oracle_unitary_step(H, state, layout, step.x_label, step.y_label,
                                            adjoint=adjoint)
                if tally is not None:
                    tally.calls += 1
            else:
                state = step.apply(state, layout, adjoint=adjoint)
        return state

    def unitary(self, ch: Challenge, H: OracleTable, layout: RegisterLayout) -> np.ndarray:
        """Dense D x D matrix of the program for ``ch``."""
        return self.apply(ch, H, np.eye(layout.total_dimension, dtype=complex), layout)

    def to_dict(self) -> Dict[str, Any]:
        def encode(steps: Sequence[Step]) -> List[Dict[str, Any]]:
            out: List[Dict[str, Any]] = []
            for s in steps:
                if isinstance(s, OracleCall):
                    out.append({"oracle": [s.x_label, s.y_label]})
                else:
                    gate = np.stack([s.matrix.real, s.matrix.imag], axis=-1).tolist()
                    out.append({"gate": gate, "targets": list(s.targets)})
            return out

        programs = {key: encode(steps) for key, steps in self.programs.items()}
        if self.default is not None:
            programs["default"] = encode(self.default)
        return {"programs": programs}


def _decode_steps(raw: Sequence[Dict[str, Any]]) -> Tuple[Step, ...]:
    steps: List[Step] = []
    for item in raw:
        if "oracle" in item:
            x_label, y_label = item["oracle"]
            steps.append(OracleCall(str(x_label), str(y_label)))
        elif "gate" in item:
            pairs = np.asarray(item["gate"], dtype=float)
            if pairs.ndim != 3 or pairs.shape[-1] != 2:
                raise StrategyError("Gate matrices must be rows of [re, im] pairs")
            steps.append(LocalUnitary(pairs[..., 0] + 1j * pairs[..., 1], tuple(item["targets"])))
        else:
            raise StrategyError(f"Unrecognized strategy step {sorted(item)}")
    return tuple(steps)


def load_strategy(path: str) -> Tuple[StrategyCircuit, Optional[RegisterLayout]]:
    """
    Read a strategy file.

    The file holds ``programs`` (challenge key or ``default`` to a step list)
    and, optionally, ``subsystems``/``advice``/``answer`` describing its
    register layout.

    Args:
        path: JSON strategy file.

    Returns:
        The circuit and its layout, or None when the file names none.
    """
    try:
        data = json.loads(Path(path).read_text())
        programs = {str(k): _decode_steps(v) for k, v in data["programs"].items()}
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"Could not read strategy file {path}: {e}") from e
    default = programs.pop("default", None)
    layout = None
    if "subsystems" in data:
        layout = RegisterLayout.build(
            data["subsystems"], data.get("advice", []), data.get("answer", "ans")
        )
    strategy = StrategyCircuit(programs, default)
    logger.info(f"Loaded strategy with {len(programs)} programs (T={strategy.query_count}) from {path}")
    return strategy, layout


def identity_strategy() -> StrategyCircuit:
    """The empty program for every challenge."""
    return StrategyCircuit({}, ())


def default_layout(game: GameSpec) -> RegisterLayout:
    """A single register that is both the advice and the answer (d_L = 1)."""
    return RegisterLayout.build([("ans", len(game.answer_space))], ["ans"], "ans")


def check_layout(game: GameSpec, layout: RegisterLayout) -> None:
    if layout.dimension(layout.answer_label) != len(game.answer_space):
        raise DimensionMismatch(
            f"Answer register {layout.answer_label!r} has dimension "
            f"{layout.dimension(layout.answer_label)}, {game.name} has "
            f"{len(game.answer_space)} answers"
        )


def apply_strategy(strat: StrategyCircuit, challenge: Challenge, H: OracleTable,
                   state: np.ndarray, layout: RegisterLayout,
                   adjoint: bool = False) -> np.ndarray:
    return strat.apply(challenge, H, state, layout, adjoint=adjoint)


class AdviceKind(str, Enum):
    UNIFORM = "uniform"
    EXPLICIT = "explicit"
    MAXIMALLY_MIXED = "maximally_mixed"


@dataclass(frozen=True, eq=False)
class AdviceFamily:
    """The map H -> sigma_H of advice states."""

    kind: AdviceKind
    vectors: Mapping[Tuple[int, ...], np.ndarray] = field(default_factory=dict)
    inner: Optional["AdviceFamily"] = None

    @classmethod
    def uniform(cls) -> "AdviceFamily":
        return cls(AdviceKind.UNIFORM)

    @classmethod
    def explicit(cls, mapping: Mapping[Union[OracleTable, Tuple[int, ...]], Sequence[complex]]
                 ) -> "AdviceFamily":
        """
        Build an Explicit family from per-oracle unit vectors.

        Args:
            mapping: Oracle (or its entries tuple) to advice vector.

        Returns:
            The family.
        """
        vectors: Dict[Tuple[int, ...], np.ndarray] = {}
        for key, vec in mapping.items():
            entries = key.entries if isinstance(key, OracleTable) else tuple(key)
            v = np.asarray(vec, dtype=complex).reshape(-1)
            if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
                raise ConfigError(f"Advice for oracle {entries} is not a unit vector")
            vectors[entries] = v
        return cls(AdviceKind.EXPLICIT, vectors)

    @classmethod
    def maximally_mixed(cls, inner: Optional["AdviceFamily"] = None) -> "AdviceFamily":
        return cls(AdviceKind.MAXIMALLY_MIXED, inner=inner)

    def vector(self, H: OracleTable, advice_dimension: int) -> np.ndarray:
        if self.kind is AdviceKind.UNIFORM:
            v = np.zeros(advice_dimension, dtype=complex)
            v[0] = 1.0
            return v
        if self.kind is AdviceKind.EXPLICIT:
            try:
                v = self.vectors[H.entries]
            except KeyError:
                raise ConfigError(f"No advice for oracle {H.entries}") from None
            if v.shape[0] != advice_dimension:
                raise DimensionMismatch(
                    f"Advice has dimension {v.shape[0]}, layout expects {advice_dimension}"
                )
            return v
        raise ConfigError("A maximally mixed family has no single advice vector")


@dataclass(frozen=True)
class MixedStart:
    """Classical mixture of pure start states."""

    branches: Tuple[Tuple[float, np.ndarray], ...]


def prepare_start_state(adv: AdviceFamily, layout: RegisterLayout,
                        H: OracleTable) -> Union[np.ndarray, MixedStart]:
    """
    The start state sigma_H (x) |0...0>_work.

    Args:
        adv: Advice family.
        layout: Register layout.
        H: Oracle.

    Returns:
        A unit vector of dimension D, or for a maximally mixed family the
        mixture of every advice basis state with weight 1/d_S.
    """
    layout.check_capacity(get_settings().max_dimension)
    d_s = layout.advice_dimension
    if adv.kind is AdviceKind.MAXIMALLY_MIXED:
        columns = layout.embed_advice(np.eye(d_s, dtype=complex))
        return MixedStart(tuple((1.0 / d_s, columns[:, a]) for a in range(d_s)))
    return layout.embed_advice(adv.vector(H, d_s))


def start_branches(adv: AdviceFamily, layout: RegisterLayout,
                   H: OracleTable) -> Tuple[Tuple[float, np.ndarray], ...]:
    start = prepare_start_state(adv, layout, H)
    if isinstance(start, MixedStart):
        return start.branches
    return ((1.0, start),)


def run_and_measure(adv: AdviceFamily, strat: StrategyCircuit, game: GameSpec, H: OracleTable,
                    r: Coin, layout: RegisterLayout,
                    seed: Union[int, np.random.Generator, None] = None) -> Tuple[Answer, int]:
    """
    Play the game once with a Born-rule readout of the answer register.

    Args:
        adv: Advice family.
        strat: Strategy circuit.
        game: The game.
        H: Oracle.
        r: Coins.
        layout: Register layout.
        seed: Seed or generator for the measurement.

    Returns:
        (answer, outcome bit)
    """
    check_layout(game, layout)
    rng = np.random.default_rng(seed)
    branches = start_branches(adv, layout, H)
    if len(branches) == 1:
        state = branches[0][1]
    else:
        weights = np.array([w for w, _ in branches])
        state = branches[rng.choice(len(branches), p=weights / weights.sum())][1]
    state = strat.apply(game.challenge(H, r), H, state, layout)
    probs = layout.answer_marginal(state)
    index = int(rng.choice(len(probs), p=probs / probs.sum()))
    ans = game.answer_value(index)
    return ans, evaluate(game, H, r, ans)


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    samples: int


def monte_carlo_value(adv: AdviceFamily, strat: StrategyCircuit, game: GameSpec,
                      ensemble: OracleEnsemble, layout: RegisterLayout, samples: int,
                      seed: int = 0) -> MonteCarloEstimate:
    """Sampled game value: H by ensemble weight, r uniform, answer by Born rule."""
    if samples < 1:
        raise ConfigError("Monte Carlo needs at least one sample")
    rng = np.random.default_rng(seed)
    weights = np.asarray(ensemble.weights)
    wins = 0
    for _ in range(samples):
        H = ensemble.tables[rng.choice(len(ensemble), p=weights)]
        r = game.coin_space[rng.integers(game.num_coins)]
        _, bit = run_and_measure(adv, strat, game, H, r, layout, rng)
        wins += bit == WIN
    p = wins / samples
    return MonteCarloEstimate(p, float(np.sqrt(p * (1 - p) / samples)), samples)


@dataclass(frozen=True)
class ClassicalAdversary:
    """
    A T = 0 adversary with S bits of classical advice.

    ``advice_fn`` maps an oracle to an integer in [0, 2^S); ``response``
    maps (advice, challenge) to an answer without touching the oracle.
    """

    advice_bits: int
    advice_fn: Callable[[OracleTable], int]
    response: Callable[[int, Challenge], Answer]


def classical_run(adv: ClassicalAdversary, game: GameSpec, H: OracleTable, r: Coin) -> int:
    advice = int(adv.advice_fn(H))
    if not 0 <= advice < 2**adv.advice_bits:
        raise ConfigError(f"Advice {advice} does not fit in {adv.advice_bits} bits")
    return evaluate(game, H, r, adv.response(advice, game.challenge(H, r)))


def classical_value(adv: ClassicalAdversary, game: GameSpec, ensemble: OracleEnsemble) -> float:
    """Exact win probability of a classical adversary over the ensemble and all coins."""
    total = 0.0
    for H, w in ensemble:
        wins = sum(classical_run(adv, game, H, r) == WIN for r in game.coin_space)
        total += w * wins / game.num_coins
    return total
