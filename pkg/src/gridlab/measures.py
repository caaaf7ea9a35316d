"""Measure containers on [0, 1] and {1..K}, binning, total variation and KL."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError

MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BinnedMeasure:
    """Nonnegative mass on ``m`` equal bins of [0, 1].

    Bins are right-open except the last, which is closed.  Converting back to
    atoms places each bin's mass at the bin center.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise ContractError("a binned measure needs at least one bin")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ContractError("bin weights must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return int(self.weights.size)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def is_probability(self, tol: float = MASS_TOL) -> bool:
        return abs(self.total - 1.0) <= tol

    def centers(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) / self.m

    def to_atoms(self) -> AtomicMeasure:
        keep = self.weights > 0
        return AtomicMeasure(self.centers()[keep], self.weights[keep])

    def normalized(self) -> BinnedMeasure:
        return BinnedMeasure(self.weights / self.total)

    @classmethod
    def uniform(cls, m: int) -> BinnedMeasure:
        """Lebesgue measure on [0, 1] at resolution ``m``."""
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def from_cdf(cls, cdf: Callable[[np.ndarray], np.ndarray], m: int) -> BinnedMeasure:
        edges = np.linspace(0.0, 1.0, m + 1)
        w = np.diff(np.asarray(cdf(edges), dtype=float))
        return cls(np.clip(w, 0.0, None))

    def mix(self, other: BinnedMeasure, t: float) -> BinnedMeasure:
        """``t * self + (1 - t) * other``."""
        _same_resolution(self, other)
        return BinnedMeasure(t * self.weights + (1.0 - t) * other.weights)

    def __eq__(self, other):
        if not isinstance(other, BinnedMeasure):
            return NotImplemented
        return self.m == other.m and bool(np.array_equal(self.weights, other.weights))

    def __repr__(self):
        return f"BinnedMeasure(m={self.m}, total={self.total:.6g})"


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finitely many atoms on [0, 1]; sorted by value, equal values merged."""

    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        w = np.asarray(self.masses, dtype=float).reshape(-1)
        if v.shape != w.shape:
            raise ContractError("values and masses must have the same length")
        if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise ContractError("atom values must lie in [0, 1]")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ContractError("atom masses must be finite and nonnegative")
        order = np.argsort(v, kind="stable")
        v, w = v[order], w[order]
        if v.size:
            uniq, inverse = np.unique(v, return_inverse=True)
            if uniq.size != v.size:
                w = np.bincount(inverse, weights=w, minlength=uniq.size)
                v = uniq
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "masses", w)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> AtomicMeasure:
        pairs = [tuple(p) for p in pairs]
        if not pairs:
            return cls(np.empty(0), np.empty(0))
        v, w = zip(*pairs)
        return cls(np.array(v, dtype=float), np.array(w, dtype=float))

    @classmethod
    def dirac(cls, x: float, mass: float = 1.0) -> AtomicMeasure:
        return cls(np.array([x]), np.array([mass]))

    @classmethod
    def empirical(cls, samples: Sequence[float]) -> AtomicMeasure:
        """Mass ``1/n`` on each of the ``n`` samples."""
        s = np.asarray(samples, dtype=float).reshape(-1)
        if s.size == 0:
            return cls(s, s)
        return cls(s, np.full(s.size, 1.0 / s.size))

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(x), float(w)) for x, w in zip(self.values, self.masses)]

    def scaled(self, c: float) -> AtomicMeasure:
        return AtomicMeasure(self.values, self.masses * c)

    def __add__(self, other: AtomicMeasure) -> AtomicMeasure:
        return AtomicMeasure(
            np.concatenate([self.values, other.values]),
            np.concatenate([self.masses, other.masses]),
        )

    def __eq__(self, other):
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return bool(
            np.array_equal(self.values, other.values)
            and np.array_equal(self.masses, other.masses)
        )

    def __repr__(self):
        return f"AtomicMeasure(atoms={self.size}, total={self.total:.6g})"


@dataclass(frozen=True, eq=False)
class RationalPmf:
    """Exact pmf on {1..K}: ``P(k) = numerators[k-1] / denominator``.

    Canonical form: the fraction vector is reduced so that the gcd of all
    numerators together with the denominator is 1.  Two pmfs are equal iff
    their canonical forms coincide.
    """

    numerators: tuple[int, ...]
    denominator: int

    def __post_init__(self):
        num = tuple(int(x) for x in self.numerators)
        den = int(self.denominator)
        if den <= 0:
            raise ContractError("denominator must be positive")
        if any(x < 0 for x in num):
            raise ContractError("pmf numerators must be nonnegative")
        if sum(num) != den:
            raise ContractError(f"numerators sum to {sum(num)}, expected {den}")
        g = reduce(math.gcd, num, den)
        object.__setattr__(self, "numerators", tuple(x // g for x in num))
        object.__setattr__(self, "denominator", den // g)

    @property
    def K(self) -> int:
        return len(self.numerators)

    @classmethod
    def from_fractions(cls, probs: Sequence[Fraction | int]) -> RationalPmf:
        fr = [Fraction(p) for p in probs]
        den = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fr), 1)
        return cls(tuple(int(f * den) for f in fr), den)

    @classmethod
    def mix(cls, pmfs: Sequence[RationalPmf], weights: Sequence[Fraction | int]) -> RationalPmf:
        """Exact convex combination of pmfs on a common support."""
        if len(pmfs) != len(weights) or not pmfs:
            raise ContractError("need one weight per pmf")
        K = pmfs[0].K
        if any(p.K != K for p in pmfs):
            raise ContractError("pmfs have different support sizes")
        w = [Fraction(x) for x in weights]
        if any(x < 0 for x in w) or sum(w) != 1:
            raise ContractError("mixture weights must be nonnegative and sum to 1")
        out = [Fraction(0)] * K
        for p, wi in zip(pmfs, w):
            for k, f in enumerate(p.fractions()):
                out[k] += wi * f
        return cls.from_fractions(out)

    def fractions(self) -> list[Fraction]:
        return [Fraction(x, self.denominator) for x in self.numerators]

    @property
    def probs(self) -> np.ndarray:
        return np.array(self.numerators, dtype=float) / self.denominator

    def mean(self) -> Fraction:
        """Expected label, labels being 1..K."""
        return sum((k + 1) * f for k, f in enumerate(self.fractions()))

    def cdf(self) -> list[Fraction]:
        acc, out = Fraction(0), []
        for f in self.fractions():
            acc += f
            out.append(acc)
        return out

    def mass(self, labels: Iterable[int]) -> Fraction:
        return sum((self.fractions()[k - 1] for k in labels), Fraction(0))

    def value_multiset(self) -> list[Fraction]:
        return sorted(self.fractions())

    def to_binned(self) -> BinnedMeasure:
        """Embed {1..K} into [0, 1]: label k becomes the k-th of K bins."""
        return BinnedMeasure(self.probs)

    def __eq__(self, other):
        if not isinstance(other, RationalPmf):
            return NotImplemented
        return self.numerators == other.numerators and self.denominator == other.denominator

    def __hash__(self):
        return hash((self.numerators, self.denominator))

    def __repr__(self):
        return f"RationalPmf({list(self.numerators)}/{self.denominator})"


def bin_index(values: np.ndarray, m: int) -> np.ndarray:
    """0-based bin of each value; right-open bins, last bin closed."""
    idx = np.floor(np.asarray(values, dtype=float) * m).astype(np.int64)
    return np.clip(idx, 0, m - 1)


def bin(mu: AtomicMeasure, m: int) -> BinnedMeasure:  # noqa: A001
    """Push each atom's mass into its containing bin.

    Moving every atom to its bin center moves it at most ``1/(2m)``, so the
    LP distance between ``mu`` and ``bin(mu, m).to_atoms()`` is at most
    ``1/(2m)``.
    """
    if m < 1:
        raise ContractError("bin count must be positive")
    if mu.size == 0:
        return BinnedMeasure(np.zeros(m))
    return BinnedMeasure(np.bincount(bin_index(mu.values, m), weights=mu.masses, minlength=m))


def _same_resolution(a: BinnedMeasure, b: BinnedMeasure) -> None:
    if a.m != b.m:
        raise ContractError(f"resolution mismatch: {a.m} vs {b.m} bins")


def total_variation(mu, nu) -> float:
    """Half the l1 distance between mass vectors on a common support."""
    if isinstance(mu, BinnedMeasure) and isinstance(nu, BinnedMeasure):
        _same_resolution(mu, nu)
        return 0.5 * float(np.abs(mu.weights - nu.weights).sum())
    if isinstance(mu, AtomicMeasure) and isinstance(nu, AtomicMeasure):
        support = np.union1d(mu.values, nu.values)
        a = np.zeros(support.size)
        b = np.zeros(support.size)
        a[np.searchsorted(support, mu.values)] = mu.masses
        b[np.searchsorted(support, nu.values)] = nu.masses
        return 0.5 * float(np.abs(a - b).sum())
    if isinstance(mu, RationalPmf) and isinstance(nu, RationalPmf):
        if mu.K != nu.K:
            raise ContractError("pmfs have different support sizes")
        return 0.5 * float(np.abs(mu.probs - nu.probs).sum())
    raise ContractError("total_variation needs two measures of the same kind")


def kl_divergence(nu: BinnedMeasure, base: BinnedMeasure) -> float:
    """Relative entropy of ``nu`` w.r.t. ``base``; ``inf`` if not absolutely continuous."""
    _same_resolution(nu, base)
    p, q = nu.weights, base.weights
    if np.any((p > 0) & (q <= 0)):
        return math.inf
    pos = p > 0
    return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))
