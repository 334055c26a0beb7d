"""Wick combinatorics and single-cycle diagram sums for quasi-free states.

Conventions used throughout: in a product ``A_1 A_2 ... A_n`` of quadratic
factors ``b^dagger(x_i) b(y_i)``, the creation operator of factor ``i`` is
contracted with the annihilation operator of factor ``pi(i)``.  The
contraction is ``n(x_i)`` when the creation operator stands to the left
(``i <= pi(i)``) and ``n(x_i) + 1`` otherwise.  A contraction vanishes unless
the two modes agree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ModeOutsideCutoff, OrderTooHigh
from .observables import FluctuationObservable, QPDensity

N_MAX = 8

OPEN = "o"  # site carrying b^dagger(p) b(p+k)
CROSS = "x"  # site carrying b^dagger(p+k) b(p)


@dataclass(frozen=True)
class Monomial:
    """Ordered product of creation (``dagger=True``) and annihilation operators."""

    factors: tuple[tuple[bool, tuple[int, ...]], ...]

    def __post_init__(self) -> None:
        fs = tuple((bool(d), tuple(int(x) for x in m)) for d, m in self.factors)
        object.__setattr__(self, "factors", fs)

    @classmethod
    def of(cls, *factors: tuple[bool, Sequence[int]]) -> "Monomial":
        return cls(tuple(factors))

    @property
    def gauge_balance(self) -> int:
        """Number of daggered minus undaggered factors."""
        return sum(1 if d else -1 for d, _ in self.factors)

    def __len__(self) -> int:
        return len(self.factors)


@dataclass(frozen=True)
class CycleDiagram:
    """Sites with a symbol each and arrows forming a permutation of the sites.

    ``arrows[i] = j`` contracts the creation operator of site ``i`` with the
    annihilation operator of site ``j``.
    """

    n_sites: int
    symbols: tuple[str, ...]
    arrows: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.arrows) != list(range(self.n_sites)) or len(self.symbols) != self.n_sites:
            raise ValueError("arrows must be a permutation of the sites")

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * self.n_sites
        out = []
        for start in range(self.n_sites):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self.arrows[i]
            out.append(tuple(cyc))
        return out

    @property
    def single_cycle(self) -> bool:
        return len(self.cycles()) == 1


class ToyState:
    """Minimal quasi-free state on an explicit occupation grid.

    Occupations may be :class:`fractions.Fraction` for exact arithmetic.
    Used by the oracles and tests; has the attributes the cumulant code
    reads from a :class:`~bosefluct.thermo.GasState`.
    """

    def __init__(self, occupation: Sequence | np.ndarray, L: float = 1, included: np.ndarray | None = None):
        occ = np.array(occupation, dtype=object if _is_exact(occupation) else float)
        self.occupation = occ
        self.included = np.ones(occ.shape, bool) if included is None else np.asarray(included, bool)
        self.L = L
        self.nu = occ.ndim
        self.tail_bound = 0.0

    def occupation_of(self, k: Sequence[int]):
        k = tuple(int(x) for x in k)
        if len(k) != self.nu or any(x < 0 or x >= n for x, n in zip(k, self.occupation.shape)):
            raise ModeOutsideCutoff(f"mode {k} is outside the toy state")
        if not self.included[k]:
            raise ModeOutsideCutoff(f"mode {k} is outside the toy state")
        return self.occupation[k]


def _is_exact(values) -> bool:
    arr = np.asarray(values, dtype=object).ravel()
    return len(arr) > 0 and all(isinstance(v, (Fraction, int)) for v in arr)


# ---------------------------------------------------------------------------
# Wick expectation of a monomial


def _contraction(left: tuple[bool, tuple], right: tuple[bool, tuple], state):
    (d1, m1), (d2, m2) = left, right
    if d1 == d2 or m1 != m2:
        return 0
    n = state.occupation_of(m1)
    return n if d1 else n + 1


def wick_expectation(m: Monomial, state):
    """Expectation of an ordered monomial in a gauge-invariant quasi-free state.

    Sums, over all pairings of the factors, the product of the pair
    contractions ``<b^dagger b> = n`` and ``<b b^dagger> = n + 1``.
    """
    factors = m.factors
    for _, mode in factors:
        state.occupation_of(mode)
    if m.gauge_balance != 0:
        return 0

    def rec(rest: tuple[int, ...]):
        if not rest:
            return 1
        first, others = rest[0], rest[1:]
        total = 0
        for j, other in enumerate(others):
            c = _contraction(factors[first], factors[other], state)
            if c:
                total = total + c * rec(others[:j] + others[j + 1 :])
        return total

    return rec(tuple(range(len(factors))))


def pair_partitions(items: Sequence) -> Iterator[list[tuple]]:
    """All partitions of ``items`` (even length) into unordered pairs."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for j in range(len(rest)):
        for tail in pair_partitions(rest[:j] + rest[j + 1 :]):
            yield [(first, rest[j])] + tail


def pair_partition_count(n_items: int) -> int:
    """``c_2(2n) = (2n)!/(2^n n!)``; zero for odd counts."""
    if n_items % 2:
        return 0
    n = n_items // 2
    return math.factorial(n_items) // (2**n * math.factorial(n))


# ---------------------------------------------------------------------------
# Moments of quadratic forms by the permutation expansion


def _cycle_trace(types: tuple[int, ...], matrix, occ) -> object:
    """``sum prod_j g_j(p_j) M[p_j, p_{j-1}]`` around one cycle.

    ``types[j]`` is 0 for an ``n`` contraction and 1 for ``n + 1``.
    """
    size = len(occ)
    diag = [[occ[p] + t for p in range(size)] for t in (0, 1)]
    # Walk the cycle as a chain of matrix products acting on a column basis.
    acc = [[(diag[types[0]][p] if p == q else 0) for q in range(size)] for p in range(size)]
    for t in types[1:]:
        g = diag[t]
        # acc <- acc @ M @ diag(g)
        nxt = [[0] * size for _ in range(size)]
        for p in range(size):
            row = acc[p]
            for r in range(size):
                if row[r] == 0:
                    continue
                mr = matrix[r]
                for q in range(size):
                    if mr[q] != 0:
                        nxt[p][q] = nxt[p][q] + row[r] * mr[q] * g[q]
        acc = nxt
    total = 0
    for p in range(size):
        for q in range(size):
            if acc[p][q] != 0 and matrix[q][p] != 0:
                total = total + acc[p][q] * matrix[q][p]
    return total


def _canonical_rotation(seq: tuple[int, ...]) -> tuple[int, ...]:
    return min(seq[i:] + seq[:i] for i in range(len(seq)))


def wick_moment(order: int, matrix: Sequence[Sequence], occupation: Sequence):
    """``omega(F^order)`` for ``F = sum_{ij} M_ij b^dagger_i b_j`` in the product thermal state.

    Expands over all permutations ``pi`` of the factors; each cycle of ``pi``
    contributes a trace weighted by ``n`` or ``n + 1`` according to whether
    the creation operator of a factor precedes the annihilation operator it
    is paired with.  Exact when the inputs are :class:`Fraction`.
    """
    mat = [list(r) for r in matrix]
    occ = list(occupation)
    cache: dict[tuple[int, ...], object] = {}
    total = 0
    for perm in itertools.permutations(range(order)):
        seen = [False] * order
        value = 1
        for start in range(order):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = perm[i]
            # Factor i's creation pairs with factor pi(i)'s annihilation, which
            # forces q_{pi(i)} = p_i; the trace runs along decreasing cycle order.
            types = tuple(0 if c <= perm[c] else 1 for c in reversed(cyc))
            key = _canonical_rotation(types)
            if key not in cache:
                cache[key] = _cycle_trace(key, mat, occ)
            value = value * cache[key]
            if value == 0:
                break
        total = total + value
    return total


def truncated_from_moments(moments: Sequence) -> list:
    """Cumulants from raw moments; ``moments[i]`` is the moment of order ``i + 1``.

    Inverts the partition expansion recursively,
    ``kappa_n = m_n - sum_{j<n} C(n-1, j-1) kappa_j m_{n-j}``.
    """
    m = [1] + list(moments)
    kappa = [0] * len(m)
    for n in range(1, len(m)):
        acc = m[n]
        for j in range(1, n):
            acc = acc - math.comb(n - 1, j - 1) * kappa[j] * m[n - j]
        kappa[n] = acc
    return kappa[1:]


# ---------------------------------------------------------------------------
# Diagram enumeration


def enumerate_single_cycles(
    n_sites: int, symbols: Sequence[str] | None = None, alternating: bool = False
) -> list[CycleDiagram]:
    """All single-cycle diagrams on the given sites.

    Without symbols (the k = 0 calculus) there are ``(n-1)!`` of them.  With
    ``alternating=True`` only cycles whose arrows always join an ``o`` site to
    an ``x`` site are kept; for ``n`` of each there are ``n!(n-1)!``.
    """
    if n_sites < 2:
        raise ValueError("need at least two sites")
    syms = tuple(symbols) if symbols is not None else (OPEN,) * n_sites
    if len(syms) != n_sites or any(s not in (OPEN, CROSS) for s in syms):
        raise ValueError("symbols must be 'o' or 'x', one per site")
    out = []
    for rest in itertools.permutations(range(1, n_sites)):
        seq = (0,) + rest
        if alternating and any(syms[seq[j]] == syms[seq[(j + 1) % n_sites]] for j in range(n_sites)):
            continue
        arrows = [0] * n_sites
        for j in range(n_sites):
            arrows[seq[j]] = seq[(j + 1) % n_sites]
        out.append(CycleDiagram(n_sites, syms, tuple(arrows)))
    return out


def single_cycle_count(n: int) -> int:
    return math.factorial(n - 1)


def alternating_cycle_count(n: int) -> int:
    """Alternating single cycles over ``n`` open and ``n`` cross sites."""
    return math.factorial(n) * math.factorial(n - 1)


@lru_cache(maxsize=None)
def _cycle_orders(n: int) -> np.ndarray:
    rest = np.array(list(itertools.permutations(range(1, n))), dtype=np.int64).reshape(-1, n - 1)
    return np.concatenate([np.zeros((len(rest), 1), np.int64), rest], axis=1)


@lru_cache(maxsize=None)
def _diagram_classes(n: int, zero_mode: bool) -> tuple[tuple[tuple[tuple[int, int], ...], int], ...]:
    """Group the single-cycle diagrams of order ``n`` by their mode-sum shape.

    Each class is ``(factors, multiplicity)`` with ``factors`` a sorted tuple
    of ``(offset, type)``: the creation mode of each site relative to the
    smallest one, in units of k, and the contraction type (0: n, 1: n+1).
    """
    seqs = _cycle_orders(n)
    nxt = np.roll(seqs, -1, axis=1)
    types = (seqs > nxt).astype(np.int64)
    if zero_mode:
        counts = np.bincount(types.sum(axis=1), minlength=n + 1)
        return tuple((((0, 0),) * (n - a) + ((0, 1),) * a, int(c)) for a, c in enumerate(counts) if c)
    if n % 2:
        return ()
    totals: dict[tuple, int] = {}
    for cross_sites in itertools.combinations(range(n), n // 2):
        c = np.zeros(n, np.int64)
        c[list(cross_sites)] = 1
        cs = c[seqs]
        inc = cs[:, :-1] - (1 - cs[:, 1:])
        off = np.concatenate([np.zeros((len(seqs), 1), np.int64), np.cumsum(inc, axis=1)], axis=1)
        # Closing arrow must return to the starting offset.
        closing = off[:, -1] + cs[:, -1] - (1 - cs[:, 0])
        ok = closing == 0
        cr = (off + cs)[ok]
        cr = cr - cr.min(axis=1, keepdims=True)
        code = np.sort(cr * 2 + types[ok], axis=1)
        keys, mult = np.unique(code, axis=0, return_counts=True)
        for key, cnt in zip(keys, mult):
            k = tuple(int(x) for x in key)
            totals[k] = totals.get(k, 0) + int(cnt)
    return tuple(
        (tuple((c // 2, c % 2) for c in key), cnt) for key, cnt in sorted(totals.items())
    )


def diagram_count(n: int, zero_mode: bool) -> int:
    """Number of single-cycle diagrams with a non-trivial mode sum at order ``n``."""
    return sum(m for _, m in _diagram_classes(n, zero_mode))


# ---------------------------------------------------------------------------
# Cumulants of quasi-particle density fluctuations


def _shifted(arr: np.ndarray, shift: Sequence[int]) -> np.ndarray:
    """``out[p] = arr[p + shift]`` with zero padding (shift components >= 0)."""
    if not any(shift):
        return arr
    out = np.zeros_like(arr)
    if any(s >= n for s, n in zip(shift, arr.shape)):
        return out
    dst = tuple(slice(0, n - s) for s, n in zip(shift, arr.shape))
    src = tuple(slice(s, n) for s, n in zip(shift, arr.shape))
    out[dst] = arr[src]
    return out


def _factor_grids(state) -> tuple[np.ndarray, np.ndarray]:
    occ = np.asarray(state.occupation)
    inc = np.asarray(state.included)
    zero = 0 if occ.dtype == object else 0.0
    g0 = np.where(inc, occ, zero)
    g1 = np.where(inc, occ + 1, zero)
    return g0, g1


def _scale(state, nu: int, delta: float):
    if state.L == 1 and delta == 0:
        return 1
    return float(state.L) ** (-nu / 2 - delta)


@dataclass(frozen=True)
class CumulantResult:
    order: int
    value: float
    n_diagrams: int
    tail_estimate: float


def cumulant_diagnostics(
    order: int, observable: FluctuationObservable, state, n_max: int = N_MAX
) -> CumulantResult:
    """Truncated cumulant of ``F_{L,delta}(N'_k)`` with diagram count and tail estimate."""
    if not isinstance(observable.kind, QPDensity):
        raise TypeError("diagram sums are defined for quasi-particle density fluctuations")
    if order < 1:
        raise ValueError("order must be positive")
    if order > n_max:
        raise OrderTooHigh(f"order {order} exceeds the configured maximum {n_max}")
    k = observable.k
    nu = state.nu
    if len(k) != nu:
        raise ValueError(f"mode {k} does not match dimension {nu}")
    shape = np.asarray(state.occupation).shape
    if any(x >= n for x, n in zip(k, shape)):
        raise ModeOutsideCutoff(f"mode {k} lies beyond the retained grid")
    zero_mode = observable.zero_mode
    scale = _scale(state, nu, observable.delta)
    if not zero_mode:
        scale = scale * (Fraction(1, 2) if isinstance(scale, int) else 0.5)
    if order == 1:
        # Centred for k = 0; for k != 0 the mean vanishes by gauge balance.
        return CumulantResult(1, scale * 0, 0, 0.0)
    classes = _diagram_classes(order, zero_mode)
    g = _factor_grids(state)
    total = 0
    for factors, mult in classes:
        prod = None
        for off, t in factors:
            arr = _shifted(g[t], tuple(off * x for x in k))
            prod = arr if prod is None else prod * arr
        total = total + mult * prod.sum()
    value = scale**order * total
    n_diag = sum(m for _, m in classes)
    tail = 0.0
    if getattr(state, "tail_bound", 0.0):
        top = float(np.max(g[1]))
        tail = n_diag * abs(float(scale)) ** order * order * state.tail_bound * top ** (order - 1)
    return CumulantResult(order, value, n_diag, tail)


def fluctuation_cumulant(order: int, observable: FluctuationObservable, state, n_max: int = N_MAX):
    """``order``-th truncated cumulant of ``F_{L,delta}(N'_k)`` as a sum over single cycles.

    Each single-cycle diagram contributes the one-index mode sum
    ``sum_p prod_j g_j(p + m_j k)`` with ``g`` equal to ``n_L`` or ``n_L + 1``.
    The prefactor is ``(L^{-nu/2-delta}/2)^n`` for ``k != 0`` and
    ``L^{-n(nu/2+delta)}`` for ``k = 0``.  Returns a Fraction for exact toy states.
    """
    return cumulant_diagnostics(order, observable, state, n_max).value


def fluctuation_cumulants(max_order: int, observable: FluctuationObservable, state, n_max: int = N_MAX) -> list:
    return [fluctuation_cumulant(n, observable, state, n_max) for n in range(1, max_order + 1)]


# ---------------------------------------------------------------------------
# Oracle: the same cumulants from moments of the explicit quadratic form


def quadratic_form(observable: FluctuationObservable, state) -> tuple[list[tuple[int, ...]], list[list]]:
    """Retained modes and the Hermitian matrix of ``F_{L,delta}(N'_k)`` over them."""
    if not isinstance(observable.kind, QPDensity):
        raise TypeError("only quasi-particle densities are pure quadratic forms")
    inc = np.asarray(state.included)
    modes = [tuple(int(x) for x in i) for i in np.argwhere(inc)]
    index = {m: j for j, m in enumerate(modes)}
    scale = _scale(state, state.nu, observable.delta)
    k = observable.k
    size = len(modes)
    mat: list[list] = [[0] * size for _ in range(size)]
    if observable.zero_mode:
        for j in range(size):
            mat[j][j] = scale
    else:
        half = Fraction(1, 2) * scale if isinstance(scale, int) else 0.5 * scale
        for p, j in index.items():
            q = tuple(a + b for a, b in zip(p, k))
            if q in index:
                mat[j][index[q]] = half
                mat[index[q]][j] = half
    return modes, mat


def oracle_cumulants(max_order: int, observable: FluctuationObservable, state) -> list:
    """Cumulants from :func:`wick_moment` through :func:`truncated_from_moments`."""
    modes, mat = quadratic_form(observable, state)
    occ = [state.occupation_of(m) for m in modes]
    moments = [wick_moment(n, mat, occ) for n in range(1, max_order + 1)]
    kappa = truncated_from_moments(moments)
    if observable.zero_mode:
        kappa[0] = kappa[0] - kappa[0]
    return kappa


def expand_power(matrix: Sequence[Sequence], modes: Sequence[tuple[int, ...]], power: int) -> Iterable[tuple[object, Monomial]]:
    """Terms ``(coefficient, monomial)`` of ``(sum_ij M_ij b^dagger_i b_j)^power``."""
    pairs = [(i, j, matrix[i][j]) for i in range(len(modes)) for j in range(len(modes)) if matrix[i][j] != 0]
    for combo in itertools.product(pairs, repeat=power):
        coef = 1
        factors = []
        for i, j, v in combo:
            coef = coef * v
            factors.append((True, modes[i]))
            factors.append((False, modes[j]))
        yield coef, Monomial(tuple(factors))
