"""
Random oracle representations.

This module provides explicit oracle tables, salted views, lazily sampled
oracles, enumerable/sampled ensembles standing in for the expectation over
a uniformly random H, and the oracle-access unitary
|x, y> -> |x, (y + H(x)) mod M>.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Protocol, Sequence, Tuple

import numpy as np

from .config import get_settings
from .errors import CapExceeded, DimensionMismatch, OracleError, SaltOutOfRange
from .registers import RegisterLayout

logger = logging.getLogger(__name__)


class OracleAccess(Protocol):
    """Anything that can be queried classically as H: [N] -> [M]."""

    @property
    def domain_size(self) -> int: ...

    @property
    def range_size(self) -> int: ...

    def __call__(self, x: int) -> int: ...


@dataclass(frozen=True)
class OracleTable:
    """An explicit function H: [N] -> [M]."""

    domain_size: int
    range_size: int
    entries: Tuple[int, ...]

    def __post_init__(self) -> None:
        if self.domain_size < 1 or self.range_size < 1:
            raise OracleError("Oracle domain and range sizes must be positive")
        object.__setattr__(self, "entries", tuple(int(v) for v in self.entries))
        if len(self.entries) != self.domain_size:
            raise OracleError(
                f"Expected {self.domain_size} entries, got {len(self.entries)}"
            )
        if any(v < 0 or v >= self.range_size for v in self.entries):
            raise OracleError(f"Oracle entries must lie in [0, {self.range_size})")

    @classmethod
    def from_values(cls, values: Sequence[int], range_size: int) -> "OracleTable":
        return cls(len(values), range_size, tuple(values))

    def __call__(self, x: int) -> int:
        if not 0 <= x < self.domain_size:
            raise OracleError(f"Query {x} outside domain [0, {self.domain_size})")
        return self.entries[x]

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.domain_size, "m": self.range_size, "entries": list(self.entries)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OracleTable":
        try:
            return cls(int(data["n"]), int(data["m"]), tuple(data["entries"]))
        except KeyError as e:
            raise OracleError(f"Oracle table is missing field {e}") from None

    def save_json(self, path: str) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict()))
        logger.info(f"Saved oracle table ({self.domain_size}->{self.range_size}) to {path}")

    @classmethod
    def load_json(cls, path: str) -> "OracleTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


class CountingOracle:
    """Classical oracle access that counts evaluations."""

    def __init__(self, table: OracleTable):
        self.table = table
        self.calls = 0

    @property
    def domain_size(self) -> int:
        return self.table.domain_size

    @property
    def range_size(self) -> int:
        return self.table.range_size

    def __call__(self, x: int) -> int:
        self.calls += 1
        return self.table(x)

    def reset(self) -> int:
        calls, self.calls = self.calls, 0
        return calls


class OracleSlice:
    """The view x -> parent(offset + x) of a composite oracle; queries go through the parent."""

    def __init__(self, parent: OracleAccess, offset: int, size: int):
        if offset < 0 or offset + size > parent.domain_size:
            raise SaltOutOfRange(
                f"Slice [{offset}, {offset + size}) outside domain {parent.domain_size}"
            )
        self.parent = parent
        self.offset = offset
        self.size = size

    @property
    def domain_size(self) -> int:
        return self.size

    @property
    def range_size(self) -> int:
        return self.parent.range_size

    def __call__(self, x: int) -> int:
        if not 0 <= x < self.size:
            raise OracleError(f"Query {x} outside slice domain [0, {self.size})")
        return self.parent(self.offset + x)


@dataclass(frozen=True)
class SaltedOracleTable:
    """H: [K] x [N] -> [M] stored flat, (s, x) at index s*N + x."""

    salt_space: int
    inner: OracleTable

    def __post_init__(self) -> None:
        if self.salt_space < 1 or self.inner.domain_size % self.salt_space:
            raise OracleError(
                f"Inner domain {self.inner.domain_size} is not a multiple of K={self.salt_space}"
            )

    @property
    def base_domain(self) -> int:
        return self.inner.domain_size // self.salt_space

    def index(self, s: int, x: int) -> int:
        if not 0 <= s < self.salt_space:
            raise SaltOutOfRange(f"Salt {s} outside [0, {self.salt_space})")
        return s * self.base_domain + x


def salted_view(H: SaltedOracleTable, s: int) -> OracleTable:
    """
    Materialize the oracle H(s, .).

    Args:
        H: Salted oracle.
        s: Salt in [0, K).

    Returns:
        Table T with T.entries[x] == H.inner.entries[s*N + x].
    """
    start = H.index(s, 0)
    n = H.base_domain
    return OracleTable(n, H.inner.range_size, H.inner.entries[start:start + n])


class LazyOracle:
    """
    A random oracle whose values are drawn on first query.

    Values come from one generator seeded with ``seed`` and consumed in query
    order, so an identical query sequence replays an identical transcript.
    Single-owner and mutable.
    """

    def __init__(self, domain_size: int, range_size: int, seed: int = 0):
        if domain_size < 1 or range_size < 1:
            raise OracleError("Oracle domain and range sizes must be positive")
        self.domain_size = domain_size
        self.range_size = range_size
        self.seed = seed
        self.assigned: Dict[int, int] = {}
        self._rng = np.random.default_rng(seed)

    def query(self, x: int) -> int:
        if not 0 <= x < self.domain_size:
            raise OracleError(f"Query {x} outside domain [0, {self.domain_size})")
        if x not in self.assigned:
            self.assigned[x] = int(self._rng.integers(self.range_size))
        return self.assigned[x]

    __call__ = query

    def is_sampled(self, x: int) -> bool:
        return x in self.assigned


def lazy_query(o: LazyOracle, x: int) -> int:
    return o.query(x)


class EnsembleMode(str, Enum):
    EXHAUSTIVE = "exhaustive"
    SAMPLED = "sampled"
    CUSTOM = "custom"


@dataclass(frozen=True)
class OracleEnsemble:
    """A finite weighted family of oracles realizing E_H."""

    mode: EnsembleMode
    domain_size: int
    range_size: int
    tables: Tuple[OracleTable, ...]
    weights: Tuple[float, ...]
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if len(self.tables) != len(self.weights):
            raise OracleError("Every oracle needs exactly one weight")
        if not self.tables:
            raise OracleError("Ensemble is empty")
        if any(w < 0 for w in self.weights) or abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise OracleError("Ensemble weights must be non-negative and sum to 1")
        for table in self.tables:
            if (table.domain_size, table.range_size) != (self.domain_size, self.range_size):
                raise OracleError("All oracles in an ensemble must share domain and range")

    def __len__(self) -> int:
        return len(self.tables)

    def __iter__(self) -> Iterator[Tuple[OracleTable, float]]:
        return iter(zip(self.tables, self.weights))

    def to_dict(self) -> Dict[str, Any]:
        """Mode and seed only; tables are never serialized."""
        data: Dict[str, Any] = {
            "mode": self.mode.value,
            "n": self.domain_size,
            "m": self.range_size,
        }
        if self.mode is EnsembleMode.SAMPLED:
            data.update({"count": len(self.tables), "seed": self.seed})
        return data


def enumerate_oracles(N: int, M: int, cap: Optional[int] = None) -> OracleEnsemble:
    """
    All M^N functions [N] -> [M], lexicographic in their entries, uniformly weighted.

    Args:
        N: Domain size.
        M: Range size.
        cap: Maximum number of tables; defaults to ``QROM_ENUMERATION_CAP``.

    Returns:
        Exhaustive ensemble.
    """
    if N < 1 or M < 1:
        raise OracleError("Oracle domain and range sizes must be positive")
    cap = get_settings().enumeration_cap if cap is None else cap
    count = M**N
    if count > cap:
        raise CapExceeded(
            f"{count} oracles [{N}]->[{M}] exceed the enumeration cap {cap}; "
            "use a sampled ensemble"
        )
    tables = tuple(
        OracleTable(N, M, values) for values in itertools.product(range(M), repeat=N)
    )
    logger.debug(f"Enumerated {count} oracles [{N}]->[{M}]")
    return OracleEnsemble(EnsembleMode.EXHAUSTIVE, N, M, tables, (1.0 / count,) * count)


def sample_oracles(N: int, M: int, count: int, seed: int) -> OracleEnsemble:
    """Monte Carlo ensemble of ``count`` uniform oracles, reproducible from ``seed``."""
    if count < 1:
        raise OracleError("Sampled ensembles need at least one oracle")
    rng = np.random.default_rng(seed)
    values = rng.integers(M, size=(count, N))
    tables = tuple(OracleTable(N, M, tuple(row)) for row in values)
    return OracleEnsemble(
        EnsembleMode.SAMPLED, N, M, tables, (1.0 / count,) * count, seed=seed
    )


def ensemble_from_tables(tables: Sequence[OracleTable],
                         weights: Optional[Sequence[float]] = None) -> OracleEnsemble:
    tables = tuple(tables)
    if not tables:
        raise OracleError("Ensemble is empty")
    if weights is None:
        weights = (1.0 / len(tables),) * len(tables)
    total = float(sum(weights))
    return OracleEnsemble(
        EnsembleMode.CUSTOM,
        tables[0].domain_size,
        tables[0].range_size,
        tables,
        tuple(float(w) / total for w in weights),
    )


def oracle_unitary_step(H: OracleTable, state: np.ndarray, layout: RegisterLayout,
                        x_label: str, y_label: str, adjoint: bool = False) -> np.ndarray:
    """
    Apply U_H (or its inverse) on the designated subsystems.

    Args:
        H: Oracle table.
        state: Vector of length D, or a (D, B) matrix of column states.
        layout: Register layout of the state.
        x_label: Input register, dimension N.
        y_label: Output register, dimension M.
        adjoint: Apply |x, y> -> |x, y - H(x)> instead.

    Returns:
        The permuted state, same shape as ``state``.
    """
    if layout.dimension(x_label) != H.domain_size or layout.dimension(y_label) != H.range_size:
        raise DimensionMismatch(
            f"Oracle [{H.domain_size}]->[{H.range_size}] does not fit registers "
            f"{x_label}:{layout.dimension(x_label)}, {y_label}:{layout.dimension(y_label)}"
        )
    if x_label == y_label:
        raise DimensionMismatch("Oracle input and output registers must differ")
    state = np.asarray(state)
    batch = state.shape[1:]
    tensor = state.reshape(layout.dims + batch)
    ix, iy = layout.axis(x_label), layout.axis(y_label)
    moved = np.moveaxis(tensor, (ix, iy), (0, 1))
    out = np.empty_like(moved)
    sign = -1 if adjoint else 1
    for x, hx in enumerate(H.entries):
        out[x] = np.roll(moved[x], sign * hx, axis=0)
    return np.moveaxis(out, (0, 1), (ix, iy)).reshape(state.shape)
