"""
Inequality toolkit and security-bound calculators.

Big-O constants are explicit parameters (``c``, default 1). With c = 1 a
formula is illustrative only; a value is treated as a proven bound only
when the caller marks its constant as trusted.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

from .errors import ConfigError, EmptyGrid, MissingParam, ZeroMean

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12

NuFunction = Callable[[float, float], float]


@dataclass(frozen=True)
class WeightedValues:
    """A distribution c over indices paired with non-negative values p."""

    weights: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        c = tuple(float(x) for x in self.weights)
        p = tuple(float(x) for x in self.values)
        object.__setattr__(self, "weights", c)
        object.__setattr__(self, "values", p)
        if len(c) != len(p) or not c:
            raise ConfigError("Weights and values must be non-empty and of equal length")
        if not all(math.isfinite(x) and x >= 0 for x in c + p):
            raise ConfigError("Weights and values must be finite and non-negative")
        if abs(math.fsum(c) - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"Weights sum to {math.fsum(c)}, not 1")

    @classmethod
    def normalized(cls, weights: Sequence[float], values: Sequence[float]) -> "WeightedValues":
        total = math.fsum(weights)
        return cls(tuple(w / total for w in weights), tuple(values))

    def moment(self, k: float) -> float:
        return math.fsum(c * p**k for c, p in zip(self.weights, self.values))


def reweight_check(alpha: WeightedValues) -> Tuple[float, float]:
    """
    Mean before and after reweighting by the values themselves.

    With mu = sum alpha_i p_i and beta_i = alpha_i p_i / mu, the reweighted
    mean sum beta_i p_i is never smaller than mu.

    Returns:
        (mu, sum beta_i p_i)
    """
    mu = alpha.moment(1)
    if mu <= 0:
        raise ZeroMean("Reweighting needs a positive mean")
    return mu, alpha.moment(2) / mu


def moment_ratio_sequence(cp: WeightedValues, k_max: int) -> Tuple[float, ...]:
    """S_k = sum c p^k / sum c p^{k-1} for k = 1..k_max."""
    if cp.moment(1) <= 0:
        raise ZeroMean("Moment ratios need a positive mean")
    moments = [cp.moment(k) for k in range(k_max + 1)]
    return tuple(moments[k] / moments[k - 1] for k in range(1, k_max + 1))


def jensen_bound(cp: WeightedValues, g: float) -> Tuple[float, float]:
    """(sum c p, (sum c p^g)^{1/g}); the first never exceeds the second for g >= 1."""
    if g < 1:
        raise ConfigError(f"Jensen's bound needs g >= 1, got {g}")
    return cp.moment(1), cp.moment(g) ** (1.0 / g)


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class BoundReport:
    name: str
    parameters: Dict[str, Any]
    value: float
    raw: float
    assumptions: str = "illustrative constant c; not a proven numeric bound"
    trusted: bool = False
    gamma: Optional[float] = None

    def to_row(self) -> Dict[str, Any]:
        row = {"bound": self.name, **self.parameters, "raw": self.raw, "value": self.value}
        if self.gamma is not None:
            row["gamma"] = self.gamma
        row["trusted"] = self.trusted
        return row


@dataclass(frozen=True)
class General:
    """delta <= 2 nu(S (T + T_Samp + T_Verify), T)."""


@dataclass(frozen=True)
class Decision:
    """delta <= min over gamma of nu(P / gamma, T) + gamma."""

    gamma_grid: Tuple[float, ...] = (0.05, 0.1, 0.2, 0.5, 1.0)
    refine: bool = False


BoundMode = Union[General, Decision]


def main_theorem_bound(nu_fn: NuFunction, S: int, T: int, t_samp: int, t_verify: int,
                       mode: Optional[BoundMode] = None, trusted: bool = False) -> BoundReport:
    """
    Security against (S, T) non-uniform adversaries from a bit-fixing nu.

    Args:
        nu_fn: nu(P, T).
        S: Advice size in qubits.
        T: Online queries.
        t_samp: Queries made by Samp.
        t_verify: Queries made by Verify.
        mode: General (default) or Decision with its gamma grid.
        trusted: Whether nu_fn's constants make it a proven bound.

    Returns:
        The clamped bound, with the minimizing gamma in Decision mode.
    """
    mode = mode or General()
    P = S * (T + t_samp + t_verify)
    params = {"S": S, "T": T, "t_samp": t_samp, "t_verify": t_verify, "P": P}
    if isinstance(mode, General):
        raw = 2.0 * nu_fn(P, T)
        return BoundReport("main-general", params, _clamp(raw), raw, trusted=trusted)

    grid = tuple(float(g) for g in mode.gamma_grid)
    if not grid:
        raise EmptyGrid("Decision bound needs at least one gamma")
    if any(not 0 < g <= 1 for g in grid):
        raise ConfigError(f"Every gamma must lie in (0, 1], got {grid}")

    def objective(g: float) -> float:
        return nu_fn(P / g, T) + g

    values = [objective(g) for g in grid]
    best = int(np.argmin(values))
    gamma, raw = grid[best], values[best]
    if mode.refine:
        ordered = sorted(grid)
        i = ordered.index(gamma)
        lo = ordered[i - 1] if i > 0 else gamma / 2
        hi = ordered[i + 1] if i + 1 < len(ordered) else 1.0
        result = minimize_scalar(objective, bounds=(lo, hi), method="bounded")
        if result.success and result.fun < raw:
            gamma, raw = float(result.x), float(result.fun)
    params["gamma_grid"] = ",".join(f"{g:g}" for g in grid)
    return BoundReport("main-decision", params, _clamp(raw), raw, trusted=trusted, gamma=gamma)


def owf_nu(P: float, T: float, N: int, M: int, c: float = 1.0) -> float:
    """Bit-fixing security of function inversion: c (P + T^2) / min(N, M)."""
    return c * (P + T**2) / min(N, M)


def prg_nu(P: float, T: float, N: int, c: float = 1.0) -> float:
    """Bit-fixing distinguishing advantage: 1/2 + c sqrt((P + T^2) / N)."""
    return 0.5 + c * math.sqrt((P + T**2) / N)


def salted_nu_general(nu_T: float, P: float, K: int, c: float = 1.0) -> float:
    return 2.0 * nu_T + c * P / K


def salted_nu_decision(nu_T: float, P: float, K: int, c: float = 1.0) -> float:
    return nu_T + c * math.sqrt(P / K)


class Application(str, Enum):
    OWF = "owf"
    PRG = "prg"
    SALT_GENERAL = "salt-general"
    SALT_DECISION = "salt-decision"
    CLASSICAL_GENERAL = "classical-general"


_REQUIRED = {
    Application.OWF: ("s", "t", "n", "m", "t_samp", "t_verify"),
    Application.PRG: ("s", "t", "n"),
    Application.SALT_GENERAL: ("nu", "s", "t", "k", "t_samp", "t_verify"),
    Application.SALT_DECISION: ("nu", "s", "t", "k", "t_samp", "t_verify"),
    Application.CLASSICAL_GENERAL: ("nu", "s", "t", "t_samp", "t_verify"),
}

_DEFAULTS = {
    Application.OWF: {"t_samp": 1, "t_verify": 2},
}


def application_bound(which: Union[Application, str], params: Mapping[str, float],
                      c: float = 1.0, trusted: bool = False) -> BoundReport:
    """
    Evaluate one of the closed-form application bounds.

    Args:
        which: owf, prg, salt-general, salt-decision or classical-general.
        params: s, t and the sizes the formula needs (n, m, k), the query
            counts t_samp/t_verify, and for salted/classical bounds the
            numeric nu value.
        c: Constant replacing every O(.).
        trusted: Whether c is known to make the formula a proven bound.

    Returns:
        The clamped report.

    Note:
        salt-decision evaluates nu + c (P/K)^{1/3} with P = S (T + t_samp +
        t_verify), the form the salting argument produces before it is
        simplified to (ST/K)^{1/3}. The two agree up to the constant
        whenever t_samp and t_verify are O(T); pass t_samp = t_verify = 0
        to get the (ST/K)^{1/3} form exactly.
    """
    try:
        which = Application(which)
    except ValueError:
        raise ConfigError(f"Unknown bound {which!r}; choose from {[a.value for a in Application]}") from None
    values = {**_DEFAULTS.get(which, {}), **{k: v for k, v in params.items() if v is not None}}
    missing = [name for name in _REQUIRED[which] if name not in values]
    if missing:
        raise MissingParam(f"{which.value} bound needs {missing}")
    s, t = float(values["s"]), float(values["t"])

    if which is Application.OWF:
        P = s * (t + values["t_samp"] + values["t_verify"])
        raw = 2.0 * owf_nu(P, t, int(values["n"]), int(values["m"]), c)
    elif which is Application.PRG:
        n = float(values["n"])
        raw = 0.5 + c * math.sqrt(t**2 / n) + c * (s * t / n) ** (1.0 / 3.0)
    elif which is Application.SALT_GENERAL:
        P = s * (t + values["t_samp"] + values["t_verify"])
        raw = 4.0 * values["nu"] + c * P / values["k"]
    elif which is Application.SALT_DECISION:
        P = s * (t + values["t_samp"] + values["t_verify"])
        raw = values["nu"] + c * (P / values["k"]) ** (1.0 / 3.0)
    else:
        raw = 2.0 * values["nu"]

    shown = {name: values[name] for name in _REQUIRED[which]}
    shown["c"] = c
    return BoundReport(which.value, shown, _clamp(raw), raw, trusted=trusted)


def doubling_inequality(gammas: Sequence[float]) -> pd.DataFrame:
    """Rows (gamma, (1 + gamma)^{1/gamma}, holds) for the check 2 <= (1 + gamma)^{1/gamma}."""
    g = np.asarray(gammas, dtype=float)
    if np.any((g <= 0) | (g > 1)):
        raise ConfigError("gamma must lie in (0, 1]")
    power = (1.0 + g) ** (1.0 / g)
    return pd.DataFrame({"gamma": g, "power": power, "holds": power >= 2.0 - 1e-12})


@dataclass(frozen=True)
class Comparison:
    game: str
    empirical: float
    bound: float
    slack: float
    violation: bool
    informational_excess: bool

    def to_row(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def empirical_vs_bound(game_name: str, empirical: float, bound: BoundReport) -> Comparison:
    """
    Compare the best value an adversary search found with a bound.

    Only a trusted bound can be violated; an untrusted one being exceeded is
    reported as informational.
    """
    if not (0.0 <= empirical <= 1.0 + 1e-12):
        raise ConfigError(f"Empirical value {empirical} is not a probability")
    slack = bound.value - empirical
    exceeds = slack < -1e-12
    if exceeds and bound.trusted:
        logger.warning(f"{game_name}: empirical {empirical:.6g} exceeds trusted bound {bound.value:.6g}")
    return Comparison(game_name, empirical, bound.value, slack, exceeds and bound.trusted,
                      exceeds and not bound.trusted)


def bound_sweep(which: Union[Application, str], grid: Mapping[str, Sequence[float]],
                c: float = 1.0) -> pd.DataFrame:
    """
    Evaluate a bound on the Cartesian product of parameter lists.

    Args:
        which: Application name.
        grid: Parameter name to the values it sweeps over; scalars are
            held fixed.
        c: Constant.

    Returns:
        One row per grid point.
    """
    names = list(grid)
    axes = [v if isinstance(v, (list, tuple)) else [v] for v in grid.values()]
    rows = [
        application_bound(which, dict(zip(names, point)), c).to_row()
        for point in itertools.product(*axes)
    ]
    logger.info(f"Swept {which} over {len(rows)} points")
    return pd.DataFrame(rows)
