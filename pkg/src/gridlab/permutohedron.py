"""Exact combinatorics of the discrete model with labels Unif{1..K}.

Orderings of the labels index the greedy tables, whose pmfs are the vertices
of the polytope of achievable chosen-label laws.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import ContractError, SizeError
from .measures import RationalPmf
from .strategies import (
    StrategyTable,
    encode,
    inverse_permutation,
    is_consistent,
    scramble,
    sigma_discrete,
    sigma_max_pmf,
)

MAX_WEIGHT_SCAN = 10**7
MAX_TABLE_ENUMERATION = 10**6


def _check_ordering(alpha: Sequence[int], K: int) -> tuple[int, ...]:
    alpha = tuple(int(a) for a in alpha)
    if sorted(alpha) != list(range(1, K + 1)):
        raise ContractError(f"{alpha!r} is not an ordering of 1..{K}")
    return alpha


def extreme_sigma(alpha: Sequence[int], K: int, D: int) -> RationalPmf:
    """Law of the alpha-largest of D labels: label alpha[k-1] gets (k^D-(k-1)^D)/K^D."""
    alpha = _check_ordering(alpha, K)
    num = [0] * K
    for k, label in enumerate(alpha, start=1):
        num[label - 1] = k**D - (k - 1) ** D
    return RationalPmf(tuple(num), K**D)


def greedy_table(alpha: Sequence[int], D: int) -> StrategyTable:
    return StrategyTable.greedy(alpha, D)


# -- weight tuples ---------------------------------------------------------


def _p1(table: StrategyTable, rows0: np.ndarray) -> np.ndarray:
    """Exact numerators of p_1 on 0-based label rows."""
    return table.num[encode(rows0, table.K), 0]


def _require_deterministic_consistent(table: StrategyTable) -> None:
    if not table.is_deterministic():
        raise ContractError("weight tuples need a deterministic table")
    if not is_consistent(table):
        raise ContractError("weight tuples need a consistent table")


def _weights_numerators(table: StrategyTable, tuples0: np.ndarray) -> np.ndarray:
    """w_j * den for each row of (D+1)-tuples (0-based labels)."""
    D = table.D
    w = np.zeros(tuples0.shape, dtype=np.int64)
    for j in range(D + 1):
        for k in range(D + 1):
            if k == j:
                continue
            rest = [t for t in range(D + 1) if t not in (j, k)]
            w[:, j] += _p1(table, tuples0[:, [j] + rest])
    return w


def weight_tuple(table: StrategyTable, labels: Sequence[int]) -> tuple[int, ...]:
    """How often each of D+1 distinct labels is chosen among its D-subtuples."""
    _require_deterministic_consistent(table)
    labels = tuple(int(x) for x in labels)
    if len(labels) != table.D + 1:
        raise ContractError(f"need {table.D + 1} labels")
    if len(set(labels)) != len(labels):
        raise ContractError("weight tuples need distinct labels")
    if min(labels) < 1 or max(labels) > table.K:
        raise ContractError(f"labels must lie in 1..{table.K}")
    w = _weights_numerators(table, np.asarray([labels], dtype=np.int64) - 1)[0]
    return tuple(int(x) // table.den for x in w)


@dataclass
class WeightReport:
    all_perm_of_D10: bool
    checked: int
    counterexamples: list[tuple[tuple[int, ...], tuple[int, ...]]] = field(default_factory=list)


def verify_weight_tuples(table: StrategyTable, K: int | None = None, D: int | None = None,
                         max_counterexamples: int = 10) -> WeightReport:
    """Check that every distinct-label (D+1)-tuple has weights (D,1,0,...,0) up to order."""
    K = table.K if K is None else K
    D = table.D if D is None else D
    if (K, D) != (table.K, table.D):
        raise ContractError("K, D do not match the table")
    if K ** (D + 1) > MAX_WEIGHT_SCAN:
        raise SizeError(f"K^(D+1) = {K ** (D + 1)} exceeds {MAX_WEIGHT_SCAN}")
    _require_deterministic_consistent(table)
    tuples = np.array(list(itertools.permutations(range(K), D + 1)), dtype=np.int64)
    if tuples.size == 0:
        return WeightReport(True, 0)
    w = _weights_numerators(table, tuples) // table.den
    target = np.array(sorted([D, 1] + [0] * (D - 1)))
    ok = np.all(np.sort(w, axis=1) == target, axis=1)
    bad = np.nonzero(~ok)[0][:max_counterexamples]
    ce = [(tuple(int(x) + 1 for x in tuples[i]), tuple(int(x) for x in w[i])) for i in bad]
    return WeightReport(bool(ok.all()), int(len(tuples)), ce)


def density_from_weights(table: StrategyTable, K: int | None = None, D: int | None = None) -> list[Fraction]:
    """Density of the chosen label w.r.t. uniform labels, via weight tuples.

    ``f(t)`` is the average of ``w_1(t, u_2, ..., u_{D+1})`` over all label
    tuples for the other D coordinates; it equals ``K * pmf(t)``.
    """
    K = table.K if K is None else K
    D = table.D if D is None else D
    if not is_consistent(table):
        raise ContractError("density_from_weights needs a consistent table")
    others = np.indices((K,) * D).reshape(D, -1).T.astype(np.int64)
    out = []
    for t in range(K):
        tuples = np.concatenate([np.full((others.shape[0], 1), t), others], axis=1)
        w1 = np.zeros(others.shape[0], dtype=object)
        for k in range(1, D + 1):
            rest = [r for r in range(1, D + 1) if r != k]
            w1 = w1 + _p1(table, tuples[:, [0] + rest]).astype(object)
        out.append(Fraction(int(w1.sum()), table.den * others.shape[0]))
    return out


# -- deterministic consistent tables --------------------------------------


def _choice_multisets(K: int, D: int) -> list[tuple[int, ...]]:
    """Label multisets (1-based, sorted) with at least two distinct values."""
    return [ms for ms in itertools.combinations_with_replacement(range(1, K + 1), D)
            if len(set(ms)) > 1]


def count_deterministic_consistent(K: int, D: int) -> int:
    return math.prod(len(set(ms)) for ms in _choice_multisets(K, D))


def iter_deterministic_consistent(K: int, D: int) -> Iterator[dict[tuple[int, ...], int]]:
    """Every assignment multiset -> chosen value (single-valued multisets are forced)."""
    multisets = _choice_multisets(K, D)
    options = [sorted(set(ms)) for ms in multisets]
    for picks in itertools.product(*options):
        yield dict(zip(multisets, picks))


def table_from_choices(K: int, D: int, choices: dict[tuple[int, ...], int]) -> StrategyTable:
    def pick(labels):
        ms = tuple(sorted(labels))
        return choices.get(ms, ms[0])
    return StrategyTable.from_value_choice(K, D, pick)


def enumerate_deterministic_consistent(K: int, D: int) -> list[StrategyTable]:
    """All deterministic consistent tables: one value choice per multiset."""
    total = count_deterministic_consistent(K, D)
    if total > MAX_TABLE_ENUMERATION:
        raise SizeError(f"{total} tables exceed the bound {MAX_TABLE_ENUMERATION}")
    return [table_from_choices(K, D, c) for c in iter_deterministic_consistent(K, D)]


def _multiset_count(ms: tuple[int, ...]) -> int:
    D = len(ms)
    out = math.factorial(D)
    for v in set(ms):
        out //= math.factorial(ms.count(v))
    return out


def sigma_of_choices(K: int, D: int, choices: dict[tuple[int, ...], int]) -> RationalPmf:
    """Chosen-label pmf of a deterministic consistent table given by its choices."""
    num = [0] * K
    for ms in itertools.combinations_with_replacement(range(1, K + 1), D):
        v = choices.get(ms, ms[0]) if len(set(ms)) > 1 else ms[0]
        num[v - 1] += _multiset_count(ms)
    return RationalPmf(tuple(num), K**D)


# -- exact hull membership -------------------------------------------------


def in_convex_hull(point: Sequence, points: Sequence[Sequence]) -> bool:
    """Exact test whether ``point`` is a convex combination of ``points``.

    Phase-one simplex on ``sum l_i x_i = point, sum l_i = 1, l >= 0`` in
    rational arithmetic with Bland's rule.
    """
    if not points:
        return False
    p = [Fraction(x) for x in point]
    cols = [[Fraction(x) for x in q] for q in points]
    if any(len(c) != len(p) for c in cols):
        raise ContractError("dimension mismatch")
    rows = [[c[r] for c in cols] + [p[r]] for r in range(len(p))]
    rows.append([Fraction(1)] * len(cols) + [Fraction(1)])
    return _phase_one_feasible(rows, len(cols))


def _phase_one_feasible(rows: list[list[Fraction]], n: int) -> bool:
    m = len(rows)
    # make right-hand sides nonnegative, then append one artificial per row
    tab = []
    for r, row in enumerate(rows):
        if row[-1] < 0:
            row = [-x for x in row]
        art = [Fraction(0)] * m
        art[r] = Fraction(1)
        tab.append(row[:-1] + art + [row[-1]])
    basis = [n + r for r in range(m)]
    width = n + m
    # objective: minimize sum of artificials == maximize -sum
    obj = [Fraction(0)] * (width + 1)
    for row in tab:
        for c in range(n):
            obj[c] -= row[c]
        obj[-1] -= row[-1]
    while True:
        enter = next((c for c in range(width) if obj[c] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for r in range(m):
            a = tab[r][enter]
            if a > 0:
                ratio = tab[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    leave, best = r, ratio
        if leave is None:
            break
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for r in range(m):
            if r != leave and tab[r][enter] != 0:
                f = tab[r][enter]
                tab[r] = [x - f * y for x, y in zip(tab[r], tab[leave])]
        f = obj[enter]
        obj = [x - f * y for x, y in zip(obj, tab[leave])]
        basis[leave] = enter
    return obj[-1] == 0


def extreme_subset(points: Sequence[RationalPmf]) -> list[RationalPmf]:
    """Points that are not convex combinations of the other (distinct) points."""
    uniq = list(dict.fromkeys(points))
    vecs = [p.fractions()[:-1] for p in uniq]  # the last coordinate is implied
    out = []
    for i, p in enumerate(uniq):
        others = vecs[:i] + vecs[i + 1:]
        if not in_convex_hull(vecs[i], others):
            out.append(p)
    return out


def extreme_points_of_sigma_polytope(K: int, D: int, method: str = "minkowski") -> list[RationalPmf]:
    """Vertices of the set of pmfs reachable by single-edge strategies.

    ``method="enumerate"`` computes the pmf of every deterministic consistent
    table and filters by exact hull tests.  ``method="minkowski"`` uses that
    the pmf is a sum of independent per-multiset contributions, so the
    polytope is a Minkowski sum and its vertices can be pruned one summand at
    a time; both are exact.
    """
    if K > 5 or D > 3:
        raise SizeError("exact extreme-point search is limited to K <= 5, D <= 3")
    if method == "enumerate":
        total = count_deterministic_consistent(K, D)
        if total > MAX_TABLE_ENUMERATION:
            raise SizeError(f"{total} tables exceed the bound {MAX_TABLE_ENUMERATION}")
        pts = {sigma_of_choices(K, D, c) for c in iter_deterministic_consistent(K, D)}
        return sorted(extreme_subset(list(pts)), key=lambda p: p.numerators)
    if method != "minkowski":
        raise ContractError(f"unknown method {method!r}")
    current = [tuple([0] * K)]
    for ms in itertools.combinations_with_replacement(range(1, K + 1), D):
        c = _multiset_count(ms)
        options = sorted(set(ms))
        cand = set()
        for base in current:
            for v in options:
                nxt = list(base)
                nxt[v - 1] += c
                cand.add(tuple(nxt))
        cand = sorted(cand)
        if len(cand) > 1:
            vecs = [list(x[:-1]) for x in cand]
            cand = [x for i, x in enumerate(cand)
                    if not in_convex_hull(vecs[i], vecs[:i] + vecs[i + 1:])]
        current = cand
    pmfs = [RationalPmf(x, K**D) for x in current]
    return sorted(pmfs, key=lambda p: p.numerators)


# -- orderings and scrambles -------------------------------------------------


def ordering_of(table: StrategyTable) -> tuple[int, ...] | None:
    """The ordering alpha with ``table == greedy(alpha)``, if there is one."""
    pmf = sigma_discrete(table)
    alpha = tuple(int(k) + 1 for k in np.argsort(pmf.numerators, kind="stable"))
    if len(set(pmf.numerators)) != table.K:
        return None
    return alpha if StrategyTable.greedy(alpha, table.D) == table else None


def relabeling_to_max(table: StrategyTable) -> tuple[int, ...] | None:
    """A relabeling beta with ``scramble(table, beta) == MAX``, by exhaustive search."""
    target = StrategyTable.maximum(table.K, table.D)
    for beta in itertools.permutations(range(1, table.K + 1)):
        if scramble(table, beta) == target:
            return beta
    return None


def scramble_mean_max(table: StrategyTable) -> tuple[Fraction, tuple[int, ...]]:
    """max over all K! relabelings phi of the mean chosen label of ``p^phi``."""
    best, arg = None, None
    for phi in itertools.permutations(range(1, table.K + 1)):
        mean = sigma_discrete(scramble(table, phi)).mean()
        if best is None or mean > best:
            best, arg = mean, phi
    return best, arg


def max_mean(K: int, D: int) -> Fraction:
    """Mean chosen label of the MAX strategy."""
    return sigma_max_pmf(K, D).mean()


@dataclass
class DiscreteReport:
    K: int
    D: int
    tables: int
    extreme_pmfs: list[RationalPmf]
    bijection: dict[tuple[int, ...], RationalPmf]
    value_multiset_ok: bool
    bijection_ok: bool
    weight_tuples_ok: bool
    scramble_ok: bool


def discrete_report(K: int, D: int) -> DiscreteReport:
    """Everything the discrete model promises, checked at one (K, D)."""
    tables = count_deterministic_consistent(K, D)
    extremes = extreme_points_of_sigma_polytope(K, D)
    orderings = list(itertools.permutations(range(1, K + 1)))
    bij = {a: extreme_sigma(a, K, D) for a in orderings}
    ref_values = sigma_max_pmf(K, D).value_multiset()
    values_ok = all(p.value_multiset() == ref_values for p in extremes)
    bij_ok = set(bij.values()) == set(extremes) and len(extremes) == math.factorial(K)
    weights_ok = True
    scramble_ok = True
    for a in orderings:
        t = StrategyTable.greedy(a, D)
        if K ** (D + 1) <= MAX_WEIGHT_SCAN:
            weights_ok &= verify_weight_tuples(t).all_perm_of_D10
        scramble_ok &= scramble(t, a) == StrategyTable.maximum(K, D)
    return DiscreteReport(K, D, tables, extremes, bij, values_ok, bij_ok, weights_ok, scramble_ok)


def inverse(alpha: Sequence[int]) -> tuple[int, ...]:
    return inverse_permutation(alpha)
