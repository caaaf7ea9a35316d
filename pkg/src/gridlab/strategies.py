"""Single-edge strategies: pick one of D observed labels.

Discrete strategies are dense tables over {1..K}^D holding exact rational
choice probabilities (integer numerators over one common denominator).  Rows
are indexed by the mixed-radix code of the tuple, first coordinate most
significant.  Continuous strategies are greedy: choose the label with the
largest score, lowest index on ties.

A table is *deterministic* when every row puts all its mass on positions
holding one and the same label value.  On tuples with repeated values a
consistent table has to split that mass evenly across the tied positions, so
the chosen value is deterministic even though the row is not a 0/1 vector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ContractError, DomainError, SizeError
from .measures import BinnedMeasure, RationalPmf, bin_index

MAX_TABLE_ROWS = 10**7


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


@lru_cache(maxsize=64)
def tuple_grid(K: int, D: int) -> np.ndarray:
    """All tuples of {0..K-1}^D in row-code order, shape (K**D, D)."""
    if K**D > MAX_TABLE_ROWS:
        raise SizeError(f"K**D = {K**D} exceeds the enumeration bound {MAX_TABLE_ROWS}")
    grid = np.indices((K,) * D).reshape(D, -1).T.astype(np.int64)
    grid.setflags(write=False)
    return grid


def encode(labels0: np.ndarray, K: int) -> np.ndarray:
    """Row code of 0-based label tuples (last axis is the tuple)."""
    labels0 = np.asarray(labels0, dtype=np.int64)
    D = labels0.shape[-1]
    radix = K ** np.arange(D - 1, -1, -1, dtype=np.int64)
    return labels0 @ radix


@lru_cache(maxsize=256)
def _position_permuted_rows(K: int, D: int, perm: tuple[int, ...]) -> np.ndarray:
    """Row code of (u_perm[0], ..., u_perm[D-1]) for every row u."""
    return encode(tuple_grid(K, D)[:, list(perm)], K)


def _cyclic_shift(D: int, j: int) -> tuple[int, ...]:
    """Index map of iota_j(u) = (u_j, ..., u_D, u_1, ..., u_{j-1}), 1-based j."""
    return tuple((j - 1 + t) % D for t in range(D))


@dataclass(frozen=True, eq=False)
class StrategyTable:
    """Choice probabilities ``p[row, k] = num[row, k] / den``."""

    K: int
    D: int
    num: np.ndarray
    den: int = 1

    def __post_init__(self):
        if self.K < 1 or self.D < 1:
            raise ContractError("K and D must be positive")
        num = np.asarray(self.num)
        if num.dtype.kind not in "iu" and num.dtype != object:
            raise ContractError("table numerators must be integers; use from_fractions")
        if num.shape != (self.K**self.D, self.D):
            raise ContractError(f"table shape {num.shape} != {(self.K**self.D, self.D)}")
        den = int(self.den)
        if den <= 0:
            raise ContractError("denominator must be positive")
        if (num < 0).any():
            raise ContractError("choice probabilities must be nonnegative")
        if not np.all(num.sum(axis=1) == den):
            raise ContractError("every row of choice probabilities must sum to 1")
        g = reduce(math.gcd, (int(x) for x in np.unique(num)), den)
        num = (num // g).astype(np.int64) if den // g < 2**62 else num // g
        num.setflags(write=False)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den // g)

    # -- construction --------------------------------------------------

    @classmethod
    def from_fractions(cls, K: int, D: int, rows: Sequence[Sequence[Fraction | int]]) -> StrategyTable:
        fr = [[Fraction(x) for x in r] for r in rows]
        den = reduce(_lcm, (x.denominator for r in fr for x in r), 1)
        num = np.array([[int(x * den) for x in r] for r in fr], dtype=np.int64)
        return cls(K, D, num, den)

    @classmethod
    def from_function(cls, K: int, D: int, fn: Callable[[tuple[int, ...]], Sequence[Fraction]]) -> StrategyTable:
        """Build from ``fn(labels) -> D probabilities``, labels 1-based."""
        rows = [fn(tuple(int(v) + 1 for v in u)) for u in tuple_grid(K, D)]
        return cls.from_fractions(K, D, rows)

    @classmethod
    def from_value_choice(cls, K: int, D: int, pick: Callable[[tuple[int, ...]], int]) -> StrategyTable:
        """Deterministic table choosing the label value ``pick(labels)``.

        Mass is split evenly over the positions holding the chosen value.
        """
        grid = tuple_grid(K, D)
        L = reduce(_lcm, range(1, D + 1), 1)
        num = np.zeros(grid.shape, dtype=np.int64)
        for r, u in enumerate(grid):
            labels = tuple(int(v) + 1 for v in u)
            v = pick(labels)
            mask = np.array([x == v for x in labels])
            if not mask.any():
                raise ContractError(f"pick returned {v}, not present in {labels}")
            num[r, mask] = L // int(mask.sum())
        return cls(K, D, num, L)

    @classmethod
    def greedy(cls, alpha: Sequence[int], D: int) -> StrategyTable:
        """Choose the label that is largest under ``alpha[0] < ... < alpha[K-1]``."""
        K = len(alpha)
        if sorted(alpha) != list(range(1, K + 1)):
            raise ContractError(f"{alpha!r} is not a permutation of 1..{K}")
        rank = np.empty(K, dtype=np.int64)
        rank[np.asarray(alpha) - 1] = np.arange(K)
        grid = tuple_grid(K, D)
        r = rank[grid]
        mask = r == r.max(axis=1, keepdims=True)
        L = reduce(_lcm, range(1, D + 1), 1)
        num = mask * (L // mask.sum(axis=1, keepdims=True))
        return cls(K, D, num.astype(np.int64), L)

    @classmethod
    def maximum(cls, K: int, D: int) -> StrategyTable:
        return cls.greedy(tuple(range(1, K + 1)), D)

    @classmethod
    def minimum(cls, K: int, D: int) -> StrategyTable:
        return cls.greedy(tuple(range(K, 0, -1)), D)

    @classmethod
    def uniform(cls, K: int, D: int) -> StrategyTable:
        return cls(K, D, np.ones((K**D, D), dtype=np.int64), D)

    @classmethod
    def first_position(cls, K: int, D: int) -> StrategyTable:
        num = np.zeros((K**D, D), dtype=np.int64)
        num[:, 0] = 1
        return cls(K, D, num, 1)

    @classmethod
    def random_rational(cls, K: int, D: int, rng: np.random.Generator, den: int = 12) -> StrategyTable:
        """Random table whose entries are multiples of ``1/den``."""
        n = K**D
        cuts = np.sort(rng.integers(0, den + 1, size=(n, D - 1)), axis=1)
        edges = np.concatenate([np.zeros((n, 1), np.int64), cuts, np.full((n, 1), den)], axis=1)
        return cls(K, D, np.diff(edges, axis=1).astype(np.int64), den)

    # -- access --------------------------------------------------------

    @property
    def probs(self) -> np.ndarray:
        return self.num.astype(float) / self.den

    def row(self, labels: Sequence[int]) -> list[Fraction]:
        """Choice probabilities for a 1-based label tuple."""
        code = int(encode(np.asarray(labels) - 1, self.K))
        return [Fraction(int(x), self.den) for x in self.num[code]]

    def is_deterministic(self) -> bool:
        grid = tuple_grid(self.K, self.D)
        for r in np.nonzero((self.num > 0).sum(axis=1) > 1)[0]:
            if len(set(grid[r][self.num[r] > 0].tolist())) > 1:
                return False
        return True

    def chosen_value(self, labels: Sequence[int]) -> int:
        """The label a deterministic table picks for ``labels`` (1-based)."""
        probs = self.row(labels)
        vals = {labels[k] for k, p in enumerate(probs) if p > 0}
        if len(vals) != 1:
            raise ContractError("table is not deterministic on this tuple")
        return vals.pop()

    def __eq__(self, other):
        if not isinstance(other, StrategyTable):
            return NotImplemented
        return (
            self.K == other.K
            and self.D == other.D
            and self.den == other.den
            and bool(np.array_equal(self.num, other.num))
        )

    def __hash__(self):
        return hash((self.K, self.D, self.den, self.num.tobytes()))

    def __repr__(self):
        return f"StrategyTable(K={self.K}, D={self.D}, den={self.den})"

    def select(self, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
        """0-based positions chosen for 1-based label rows given uniforms ``u``."""
        rows = np.asarray(rows)
        if rows.ndim != 2 or rows.shape[1] != self.D:
            raise DomainError(f"rows must have {self.D} columns")
        if rows.dtype.kind not in "iu" or rows.min(initial=1) < 1 or rows.max(initial=1) > self.K:
            raise DomainError(f"table strategy needs integer labels in 1..{self.K}")
        cum = np.cumsum(self.num[encode(rows - 1, self.K)], axis=1)
        r = np.floor(np.asarray(u) * self.den).astype(np.int64)
        return (cum <= r[:, None]).sum(axis=1)


SCORE_NAMES = ("identity", "vee", "constant")


@dataclass(frozen=True, eq=False)
class ScoredStrategy:
    """Greedy continuous strategy: argmax of ``score(u_j)``, lowest index on ties.

    ``score`` is one of the named closed forms (``identity``, ``vee`` meaning
    ``|u - 1/2|``, ``constant``) or an array of per-bin values.
    """

    score: Union[str, np.ndarray]
    D: int | None = None

    def __post_init__(self):
        if isinstance(self.score, str):
            if self.score not in SCORE_NAMES:
                raise ContractError(f"unknown score {self.score!r}; expected one of {SCORE_NAMES}")
        else:
            s = np.asarray(self.score, dtype=float).reshape(-1)
            if s.size == 0 or not np.all(np.isfinite(s)):
                raise ContractError("score bins must be a nonempty finite array")
            s.setflags(write=False)
            object.__setattr__(self, "score", s)

    @property
    def name(self) -> str:
        return self.score if isinstance(self.score, str) else "bins"

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.name == "identity":
            return u
        if self.name == "vee":
            return np.abs(u - 0.5)
        if self.name == "constant":
            return np.zeros_like(u)
        return self.score[bin_index(u, self.score.size)]

    def select(self, rows: np.ndarray, u: np.ndarray | None = None) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2:
            raise DomainError("rows must be a 2-d array")
        if np.any(~np.isfinite(rows)) or rows.min(initial=0) < 0 or rows.max(initial=0) > 1:
            raise DomainError("scored strategies need labels in [0, 1]")
        return np.argmax(self.evaluate(rows), axis=1)

    def closed_form_cdf(self, D: int) -> Callable[[np.ndarray], np.ndarray] | None:
        """Exact cdf of the chosen value where one is known."""
        if self.name == "identity":
            return lambda y: np.asarray(y, dtype=float) ** D
        if self.name == "constant":
            return lambda y: np.asarray(y, dtype=float)
        if self.name == "vee":
            def cdf(y):
                y = np.asarray(y, dtype=float)
                s = np.abs(2.0 * y - 1.0) ** D
                return np.where(y >= 0.5, 0.5 + 0.5 * s, 0.5 - 0.5 * s)
            return cdf
        return None


@dataclass(frozen=True, eq=False)
class MixtureStrategy:
    """Pick component ``i`` with probability ``weights[i]``, then delegate."""

    components: tuple
    weights: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        w = tuple(Fraction(x) if not isinstance(x, float) else x for x in self.weights)
        if not comps or len(comps) != len(w):
            raise ContractError("need one weight per component")
        if any(x < 0 for x in w):
            raise ContractError("mixture weights must be nonnegative")
        if abs(float(sum(w)) - 1.0) > 1e-12 or (
            all(isinstance(x, Fraction) for x in w) and sum(w) != 1
        ):
            raise ContractError(f"mixture weights sum to {float(sum(w))!r}, not 1")
        kinds = {type(c) for c in comps}
        if StrategyTable in kinds:
            if kinds != {StrategyTable} or len({(c.K, c.D) for c in comps}) != 1:
                raise ContractError("table components must share K and D")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def is_discrete(self) -> bool:
        return isinstance(self.components[0], StrategyTable)

    def as_table(self) -> StrategyTable:
        """Collapse a mixture of tables into one exact table."""
        if not self.is_discrete:
            raise ContractError("only mixtures of tables collapse to a table")
        w = [Fraction(x) for x in self.weights]
        den = reduce(_lcm, (x.denominator * c.den for x, c in zip(w, self.components)), 1)
        num = sum(
            c.num.astype(object) * (x.numerator * (den // (x.denominator * c.den)))
            for x, c in zip(w, self.components)
        )
        c0 = self.components[0]
        return StrategyTable(c0.K, c0.D, np.asarray(num, dtype=np.int64), den)

    def select(self, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        cum = np.cumsum([float(x) for x in self.weights])
        cum[-1] = 1.0
        comp = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
        lo = np.concatenate([[0.0], cum[:-1]])
        out = np.zeros(len(u), dtype=np.int64)
        for i, c in enumerate(self.components):
            sel = comp == i
            if sel.any():
                width = cum[i] - lo[i]
                # reuse the uniform: conditional on the component it is uniform again
                v = np.clip((u[sel] - lo[i]) / width, 0.0, np.nextafter(1.0, 0.0))
                out[sel] = c.select(np.asarray(rows)[sel], v)
        return out


Strategy = Union[StrategyTable, ScoredStrategy, MixtureStrategy]


def mixture(strategies: Sequence[Strategy], weights: Sequence) -> MixtureStrategy:
    return MixtureStrategy(tuple(strategies), tuple(weights))


def choose(strategy: Strategy, row: Sequence, rng: np.random.Generator | None = None) -> int:
    """Chosen position (1-based) for a single trial."""
    rng = rng if rng is not None else np.random.default_rng()
    u = np.array([rng.random()])
    return int(strategy.select(np.asarray([row]), u)[0]) + 1


# -- exact chosen-value distributions -------------------------------------


def sigma_discrete(table: StrategyTable | MixtureStrategy) -> RationalPmf:
    """Exact pmf of the chosen label under uniform labels on {1..K}."""
    if isinstance(table, MixtureStrategy):
        table = table.as_table()
    K, D = table.K, table.D
    grid = tuple_grid(K, D)
    num = np.zeros(K, dtype=object)
    for k in range(D):
        col = table.num[:, k]
        for x in range(K):
            num[x] += int(col[grid[:, k] == x].sum())
    return RationalPmf(tuple(int(v) for v in num), K**D * table.den)


def sigma_max_cdf(y, D: int):
    """Cdf of the largest of D uniforms."""
    return np.asarray(y, dtype=float) ** D if np.ndim(y) else float(y) ** D


def binned_sigma_max(m: int, D: int) -> BinnedMeasure:
    return BinnedMeasure.from_cdf(lambda y: sigma_max_cdf(y, D), m)


def sigma_max_pmf(K: int, D: int) -> RationalPmf:
    """``P(k) = (k^D - (k-1)^D) / K^D``."""
    return RationalPmf(tuple(k**D - (k - 1) ** D for k in range(1, K + 1)), K**D)


def sigma_scored_mc(strategy: ScoredStrategy | MixtureStrategy, D: int, N: int, m: int, seed: int,
                    chunk: int = 1 << 20) -> BinnedMeasure:
    """Monte Carlo chosen-value distribution of a continuous strategy, binned."""
    from .simulate import uniform_block

    if N < 1:
        raise ContractError("N must be at least 1")
    counts = np.zeros(m)
    for start in range(0, N, chunk):
        n = min(chunk, N - start)
        rows = uniform_block(seed, 0, start * D, n * D).reshape(n, D)
        u = uniform_block(seed, 1, start, n)
        pos = strategy.select(rows, u)
        vals = rows[np.arange(n), pos]
        counts += np.bincount(bin_index(vals, m), minlength=m)
    return BinnedMeasure(counts / N)


# -- symmetries ----------------------------------------------------------


def make_consistent(table: StrategyTable) -> StrategyTable:
    """Average a table over position symmetries without changing its pmf.

    Step one averages over the D cyclic shifts,
    ``p'_i(u) = (1/D) sum_k p_k(iota_{i-k+1}(u))``; step two averages ``p'_i``
    over the ``(D-1)!`` permutations fixing ``i``.
    """
    K, D = table.K, table.D
    num = table.num.astype(object)
    p1 = np.zeros_like(num)
    for i in range(1, D + 1):
        acc = 0
        for k in range(1, D + 1):
            j = (i - k) % D + 1
            acc = acc + num[_position_permuted_rows(K, D, _cyclic_shift(D, j)), k - 1]
        p1[:, i - 1] = acc
    q = np.zeros_like(num)
    for i in range(D):
        others = [t for t in range(D) if t != i]
        acc = 0
        for perm in itertools.permutations(others):
            full = list(range(D))
            for src, dst in zip(others, perm):
                full[src] = dst
            acc = acc + p1[_position_permuted_rows(K, D, tuple(full)), i]
        q[:, i] = acc
    den = table.den * D * math.factorial(D - 1)
    return StrategyTable(K, D, _shrink(q), den)


def _shrink(arr: np.ndarray) -> np.ndarray:
    if arr.size and max(int(x) for x in arr.ravel()) < 2**62:
        return arr.astype(np.int64)
    return arr


def is_consistent(table: StrategyTable) -> bool:
    """Cyclic-shift identities and invariance under permutations fixing i."""
    K, D = table.K, table.D
    num = table.num
    for i in range(1, D + 1):
        ref = None
        for k in range(1, D + 1):
            j = (i - k) % D + 1
            col = num[_position_permuted_rows(K, D, _cyclic_shift(D, j)), k - 1]
            if ref is None:
                ref = col
            elif not np.array_equal(ref, col):
                return False
    for i in range(D):
        others = [t for t in range(D) if t != i]
        for perm in itertools.permutations(others):
            full = list(range(D))
            for src, dst in zip(others, perm):
                full[src] = dst
            if not np.array_equal(num[_position_permuted_rows(K, D, tuple(full)), i], num[:, i]):
                return False
    return True


def scramble(table: StrategyTable, phi: Sequence[int]) -> StrategyTable:
    """``p^phi(u) = p(phi(u_1), ..., phi(u_D))``; ``phi[k-1]`` is the image of k."""
    K, D = table.K, table.D
    if sorted(phi) != list(range(1, K + 1)):
        raise ContractError(f"{phi!r} is not a bijection of 1..{K}")
    phi0 = np.asarray(phi, dtype=np.int64) - 1
    rows = encode(phi0[tuple_grid(K, D)], K)
    return StrategyTable(K, D, table.num[rows], table.den)


def inverse_permutation(phi: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(phi)
    for k, v in enumerate(phi, start=1):
        inv[v - 1] = k
    return tuple(inv)


# -- value distribution of the density -------------------------------------


@dataclass
class ValueDistribution:
    """Law of ``f(U)`` for a binned density ``f`` and ``U`` uniform."""

    values: np.ndarray
    weights: np.ndarray = field(repr=False)

    def cdf(self, t) -> np.ndarray:
        cum = np.cumsum(self.weights)
        idx = np.searchsorted(self.values, np.asarray(t, dtype=float), side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def sup_deviation(self, law_cdf: Callable[[np.ndarray], np.ndarray]) -> float:
        """Kolmogorov distance to a continuous law."""
        cum = np.cumsum(self.weights)
        before = np.concatenate([[0.0], cum[:-1]])
        g = np.asarray(law_cdf(self.values), dtype=float)
        return float(max(np.max(np.abs(cum - g)), np.max(np.abs(before - g))))


def extreme_density_law(t, D: int):
    """``P(f_MAX(U) <= t) = (t/D)^(1/(D-1))`` on [0, D]."""
    t = np.clip(np.asarray(t, dtype=float) / D, 0.0, 1.0)
    return t ** (1.0 / (D - 1))


def density_value_distribution(strategy: ScoredStrategy, D: int, N: int, seed: int,
                               m: int = 200) -> ValueDistribution:
    """Estimate the density on m bins by simulation and return the law of f(U)."""
    if N < 10**4:
        raise ContractError("density_value_distribution needs N >= 10^4")
    dens = sigma_scored_mc(strategy, D, N, m, seed).weights * m
    order = np.argsort(dens, kind="stable")
    return ValueDistribution(dens[order], np.full(m, 1.0 / m))
