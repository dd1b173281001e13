"""
Security games G = (Samp, Verify) in the QROM.

A game draws coins r, hands the adversary the challenge Samp^H(r) and
judges its answer with Verify^H(r, ans). Verify returns WIN (0) or LOSE (1).
Both algorithms are classical, deterministic and make a bounded number of
oracle queries, which ``evaluate`` checks with an instrumented counter.
"""

import itertools
import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Dict, FrozenSet, Hashable, Tuple

from .errors import (
    AnswerOutOfRange,
    CoinOutOfRange,
    ConfigError,
    QueryBudgetExceeded,
)
from .oracle import CountingOracle, OracleAccess, OracleSlice, OracleTable

logger = logging.getLogger(__name__)

WIN = 0
LOSE = 1

Coin = Hashable
Challenge = Hashable
Answer = Hashable


@dataclass(frozen=True)
class GameSpec:
    """
    A game over oracles [oracle_domain] -> [oracle_range].

    ``answer_space`` is ordered: basis state a of the adversary's answer
    register means the answer ``answer_space[a]``.
    """

    name: str
    coin_space: Tuple[Coin, ...]
    answer_space: Tuple[Answer, ...]
    samp: Callable[[OracleAccess, Coin], Challenge]
    verify: Callable[[OracleAccess, Coin, Answer], int]
    t_samp: int
    t_verify: int
    oracle_domain: int
    oracle_range: int
    is_decision: bool = False

    @cached_property
    def _coins(self) -> FrozenSet[Coin]:
        return frozenset(self.coin_space)

    @cached_property
    def _answer_index(self) -> Dict[Answer, int]:
        return {a: i for i, a in enumerate(self.answer_space)}

    @property
    def num_coins(self) -> int:
        return len(self.coin_space)

    def answer_index(self, ans: Answer) -> int:
        try:
            return self._answer_index[ans]
        except KeyError:
            raise AnswerOutOfRange(f"{ans!r} is not in the answer space of {self.name}") from None

    def answer_value(self, index: int) -> Answer:
        return self.answer_space[index]

    def check_coin(self, r: Coin) -> None:
        if r not in self._coins:
            raise CoinOutOfRange(f"{r!r} is not a coin of {self.name}")

    def check_oracle(self, H: OracleAccess) -> None:
        if (H.domain_size, H.range_size) != (self.oracle_domain, self.oracle_range):
            raise ConfigError(
                f"{self.name} expects oracles [{self.oracle_domain}]->[{self.oracle_range}], "
                f"got [{H.domain_size}]->[{H.range_size}]"
            )

    def challenge(self, H: OracleAccess, r: Coin) -> Challenge:
        return self.samp(H, r)

    def wins(self, H: OracleAccess, r: Coin, ans: Answer) -> bool:
        return self.verify(H, r, ans) == WIN


def evaluate(game: GameSpec, H: OracleTable, r: Coin, ans: Answer) -> int:
    """
    Play one full (Samp, Verify) round with query accounting.

    Args:
        game: The game.
        H: Oracle.
        r: Coins.
        ans: The adversary's answer.

    Returns:
        WIN (0) or LOSE (1).
    """
    game.check_coin(r)
    game.answer_index(ans)
    counter = CountingOracle(H)
    game.samp(counter, r)
    samp_calls = counter.reset()
    bit = game.verify(counter, r, ans)
    verify_calls = counter.reset()
    if samp_calls > game.t_samp or verify_calls > game.t_verify:
        raise QueryBudgetExceeded(
            f"{game.name}: Samp made {samp_calls}/{game.t_samp}, "
            f"Verify made {verify_calls}/{game.t_verify} queries"
        )
    return bit


def owf_game(N: int, M: int) -> GameSpec:
    """Function inversion: given H(x), find any preimage."""
    if N < 1 or M < 1:
        raise ConfigError("OWF needs N, M >= 1")

    def samp(H: OracleAccess, x: int) -> int:
        return H(x)

    def verify(H: OracleAccess, x: int, guess: int) -> int:
        # both sides evaluated, so Verify costs two queries
        return WIN if H(guess) == H(x) else LOSE

    return GameSpec(
        name="owf",
        coin_space=tuple(range(N)),
        answer_space=tuple(range(N)),
        samp=samp,
        verify=verify,
        t_samp=1,
        t_verify=2,
        oracle_domain=N,
        oracle_range=M,
    )


def prg_game(N: int, M: int) -> GameSpec:
    """Distinguish H(x) from a uniform y; coins are (b, x, y)."""
    if N < 1 or M < 1:
        raise ConfigError("PRG needs N, M >= 1")

    def samp(H: OracleAccess, r: Tuple[int, int, int]) -> int:
        b, x, y = r
        return H(x) if b == 0 else y

    def verify(H: OracleAccess, r: Tuple[int, int, int], guess: int) -> int:
        return WIN if guess == r[0] else LOSE

    return GameSpec(
        name="prg",
        coin_space=tuple(itertools.product(range(2), range(N), range(M))),
        answer_space=(0, 1),
        samp=samp,
        verify=verify,
        t_samp=1,
        t_verify=0,
        oracle_domain=N,
        oracle_range=M,
        is_decision=True,
    )


def salt_game(G: GameSpec, K: int) -> GameSpec:
    """
    Compile G into its salted version over H: [K*N] -> [M].

    Args:
        G: Inner game over [N] -> [M].
        K: Salt space size.

    Returns:
        Game with coins (s, r), challenges (s, ch) and Samp/Verify run
        against the slice H(s, .).
    """
    if K < 1:
        raise ConfigError("Salt space must be non-empty")
    n = G.oracle_domain

    def samp(H: OracleAccess, coin: Tuple[int, Coin]) -> Tuple[int, Challenge]:
        s, r = coin
        return (s, G.samp(OracleSlice(H, s * n, n), r))

    def verify(H: OracleAccess, coin: Tuple[int, Coin], ans: Answer) -> int:
        s, r = coin
        return G.verify(OracleSlice(H, s * n, n), r, ans)

    return GameSpec(
        name=f"salted:{G.name}:{K}",
        coin_space=tuple((s, r) for s in range(K) for r in G.coin_space),
        answer_space=G.answer_space,
        samp=samp,
        verify=verify,
        t_samp=G.t_samp,
        t_verify=G.t_verify,
        oracle_domain=K * n,
        oracle_range=G.oracle_range,
        is_decision=G.is_decision,
    )


@dataclass(frozen=True)
class YzCode:
    """A code C over alphabet [0, |Sigma|) of block length n."""

    n: int
    alphabet_size: int
    codewords: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n < 1 or self.alphabet_size < 1:
            raise ConfigError("YZ code needs n >= 1 and a non-empty alphabet")
        words = tuple(tuple(int(c) for c in w) for w in self.codewords)
        object.__setattr__(self, "codewords", words)
        if len(set(words)) != len(words):
            raise ConfigError("YZ codewords must be distinct")
        for w in words:
            if len(w) != self.n or any(not 0 <= c < self.alphabet_size for c in w):
                raise ConfigError(f"Codeword {w} is not a length-{self.n} word over the alphabet")

    @cached_property
    def _members(self) -> FrozenSet[Tuple[int, ...]]:
        return frozenset(self.codewords)

    def __contains__(self, word: object) -> bool:
        return word in self._members

    def __len__(self) -> int:
        return len(self.codewords)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "sigma": self.alphabet_size, "codewords": [list(w) for w in self.codewords]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "YzCode":
        try:
            return cls(int(data["n"]), int(data["sigma"]), tuple(tuple(w) for w in data["codewords"]))
        except KeyError as e:
            raise ConfigError(f"Code file is missing field {e}") from None


def load_code(path: str) -> YzCode:
    code = YzCode.from_dict(json.loads(Path(path).read_text()))
    logger.info(f"Loaded YZ code with {len(code)} codewords (n={code.n}) from {path}")
    return code


def save_code(code: YzCode, path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(code.to_dict()))


def yz_bits(y: int, n: int) -> Tuple[int, ...]:
    """Bits y_1..y_n of an n-bit integer, most significant first."""
    return tuple((y >> (n - 1 - i)) & 1 for i in range(n))


def yz_game(code: YzCode) -> GameSpec:
    """
    Invert f(c) = H(0, c_0) || ... || H(n-1, c_{n-1}) on codewords.

    The oracle is [n * |Sigma|] -> {0, 1} with (i, c) at index i*|Sigma| + c;
    coins and challenges are the n-bit image y as an integer.
    """
    n, sigma = code.n, code.alphabet_size

    def samp(H: OracleAccess, y: int) -> int:
        return y

    def verify(H: OracleAccess, y: int, ans: Tuple[int, ...]) -> int:
        if ans not in code:
            return LOSE
        for i, (c, bit) in enumerate(zip(ans, yz_bits(y, n))):
            if H(i * sigma + c) != bit:
                return LOSE
        return WIN

    return GameSpec(
        name="yz",
        coin_space=tuple(range(2**n)),
        answer_space=tuple(itertools.product(range(sigma), repeat=n)),
        samp=samp,
        verify=verify,
        t_samp=0,
        t_verify=n,
        oracle_domain=n * sigma,
        oracle_range=2,
    )


def build_game(selector: str, domain_size: int = 2, range_size: int = 2) -> GameSpec:
    """
    Build a game from its config selector.

    Args:
        selector: ``owf``, ``prg``, ``salted:<inner>:<K>`` or ``yz:<code-file>``.
        domain_size: Inner oracle domain N (ignored for yz).
        range_size: Inner oracle range M (ignored for yz).

    Returns:
        The game.
    """
    kind, _, rest = selector.partition(":")
    if kind == "owf" and not rest:
        return owf_game(domain_size, range_size)
    if kind == "prg" and not rest:
        return prg_game(domain_size, range_size)
    if kind == "salted":
        inner, _, k = rest.rpartition(":")
        try:
            salts = int(k)
        except ValueError:
            raise ConfigError(f"Bad salt count in selector {selector!r}") from None
        return salt_game(build_game(inner, domain_size, range_size), salts)
    if kind == "yz" and rest:
        return yz_game(load_code(rest))
    raise ConfigError(f"Unknown game selector {selector!r}")
