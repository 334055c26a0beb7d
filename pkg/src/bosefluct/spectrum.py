"""One-dimensional Robin spectrum and its composition into a box in nu dimensions.

The operator is ``-d^2/dx^2`` on ``[-L/2, L/2]`` with boundary conditions
``psi'(-L/2) = sigma psi(-L/2)`` and ``psi'(L/2) = -sigma psi(L/2)``.  Substituting
the symmetric ansatz ``cos(kx)`` / ``cosh(kappa x)`` and the antisymmetric
ansatz ``sin(kx)`` / ``sinh(kappa x)`` gives the characteristic equations

* even, ``eps = k^2``:       ``k tan(kL/2) = sigma``
* odd, ``eps = k^2``:        ``k cot(kL/2) = -sigma``
* even, ``eps = -kappa^2``:  ``kappa tanh(kappa L/2) = -sigma``
* odd, ``eps = -kappa^2``:   ``kappa coth(kappa L/2) = -sigma``

They are solved in pole-free form (multiplied through by ``cos`` or ``sin``)
by vectorised bisection on brackets taken from the interleaving chains, so
every returned eigenvalue carries a certified enclosing interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AssumptionViolated, IndexOutOfRange, NonBracketable

DEFAULT_TOL = 1e-12

# Beyond this value of L|sigma| the negative levels are solved for their
# exponentially small distance to -sigma^2 rather than for kappa itself.
_DEVIATION_FORM_THRESHOLD = 10.0


@dataclass(frozen=True)
class BoundaryElasticity:
    """Boundary elasticity ``sigma``; ``dirichlet_flag`` stands for sigma -> +inf."""

    sigma: float = 0.0
    dirichlet_flag: bool = False

    def __post_init__(self) -> None:
        if self.dirichlet_flag:
            object.__setattr__(self, "sigma", math.inf)
        elif not math.isfinite(self.sigma):
            raise ValueError("sigma must be finite unless dirichlet_flag is set")

    @classmethod
    def robin(cls, sigma: float) -> "BoundaryElasticity":
        return cls(sigma=float(sigma))

    @classmethod
    def neumann(cls) -> "BoundaryElasticity":
        return cls(sigma=0.0)

    @classmethod
    def dirichlet(cls) -> "BoundaryElasticity":
        return cls(dirichlet_flag=True)

    @property
    def attractive(self) -> bool:
        return not self.dirichlet_flag and self.sigma < 0

    @property
    def is_neumann(self) -> bool:
        return not self.dirichlet_flag and self.sigma == 0

    @property
    def floor(self) -> float:
        """Limit of the lowest level as L grows: ``-sigma^2`` if attractive, else 0."""
        return -self.sigma**2 if self.attractive else 0.0

    def label(self) -> str:
        return "dirichlet" if self.dirichlet_flag else repr(float(self.sigma))


@dataclass(frozen=True)
class SpectrumTable:
    """First ``n_max + 1`` eigenvalues of the one-dimensional problem.

    ``deviations[n]`` holds ``eps_n - boundary.floor`` computed without
    cancellation, which matters for the two attractive levels whose distance
    to ``-sigma^2`` is of order ``exp(-L|sigma|)``.
    """

    L: float
    boundary: BoundaryElasticity
    eigenvalues: np.ndarray
    brackets: np.ndarray
    parity: tuple[str, ...]
    deviations: np.ndarray = field(repr=False)
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        for arr in (self.eigenvalues, self.brackets, self.deviations):
            arr.setflags(write=False)

    @property
    def n_max(self) -> int:
        return len(self.eigenvalues) - 1

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def excess(self) -> np.ndarray:
        """``eps_n - eps_0`` for every stored level, free of cancellation."""
        return np.asarray(self.deviations - self.deviations[0])


def _bisect(
    func: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    width: Callable[[np.ndarray, np.ndarray], np.ndarray],
    tol: float,
    max_iter: int = 400,
) -> tuple[np.ndarray, np.ndarray]:
    """Shrink sign-change brackets ``[lo, hi]`` until ``width(lo, hi) <= tol``.

    Iteration also stops per bracket once the midpoint is no longer
    representable strictly between the endpoints.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    flo = np.sign(func(lo))
    fhi = np.sign(func(hi))
    exact_lo = flo == 0
    exact_hi = fhi == 0
    hi = np.where(exact_lo, lo, hi)
    lo = np.where(exact_hi, hi, lo)
    bad = (flo * fhi > 0) & ~exact_lo & ~exact_hi
    if np.any(bad):
        idx = np.flatnonzero(bad)
        raise NonBracketable(f"no sign change on brackets {idx[:5].tolist()}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (width(lo, hi) > tol) & (mid > lo) & (mid < hi)
        if not np.any(active):
            break
        fm = np.sign(func(mid))
        hit = active & (fm == 0)
        lo = np.where(hit, mid, lo)
        hi = np.where(hit, mid, hi)
        move_lo = active & (fm == flo) & ~hit
        move_hi = active & (fm != flo) & ~hit
        lo = np.where(move_lo, mid, lo)
        hi = np.where(move_hi, mid, hi)
    return lo, hi


def _energy_width(klo: np.ndarray, khi: np.ndarray) -> np.ndarray:
    return (khi - klo) * (np.abs(khi) + np.abs(klo))


def _certify(eps: np.ndarray, lo: np.ndarray, hi: np.ndarray, tol: float) -> None:
    # Resolution floor: a few ulps of the eigenvalue itself.
    floor = 8.0 * np.spacing(np.maximum(np.abs(eps), 1.0))
    too_wide = (hi - lo) > np.maximum(tol, floor)
    if np.any(too_wide):
        idx = np.flatnonzero(too_wide)
        raise NonBracketable(f"brackets {idx[:5].tolist()} wider than tol={tol}")


def _positive_levels(
    boundary: BoundaryElasticity, L: float, ns: np.ndarray, tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """Energy brackets for the levels ``ns``, all of which have eps >= 0."""
    h = 0.5 * L
    sigma = boundary.sigma
    ns = np.asarray(ns, dtype=int)
    if boundary.dirichlet_flag:
        # cos(kL/2) = 0 (even), sin(kL/2) = 0 (odd); roots (n+1)pi/L.
        klo = (ns + 0.5) * math.pi / L
        khi = (ns + 1.5) * math.pi / L

        def even(k):
            return np.cos(k * h)

        def odd(k):
            return np.sin(k * h)

    elif sigma == 0:
        # k sin(kL/2) = 0 (even), k cos(kL/2) = 0 (odd) with k > 0 removed;
        # roots n pi/L, bracketed by the half-integer points.
        klo = (ns - 0.5) * math.pi / L
        khi = (ns + 0.5) * math.pi / L

        def even(k):
            return np.sin(k * h)

        def odd(k):
            return np.cos(k * h)

    else:
        # Chains: sigma > 0 puts k_n in (n pi/L, (n+1) pi/L); sigma < 0 and n >= 2
        # puts k_n in ((n-1) pi/L, n pi/L).
        shift = 0 if sigma > 0 else -1
        klo = (ns + shift) * math.pi / L
        khi = (ns + shift + 1) * math.pi / L

        def even(k):
            return k * np.sin(k * h) - sigma * np.cos(k * h)

        def odd(k):
            return k * np.cos(k * h) + sigma * np.sin(k * h)

    is_even = ns % 2 == 0
    lo = np.empty(len(ns))
    hi = np.empty(len(ns))
    for mask, fn in ((is_even, even), (~is_even, odd)):
        if not np.any(mask):
            continue
        kl, kh = _bisect(fn, klo[mask], khi[mask], _energy_width, 0.5 * tol)
        # For the Neumann ground state the bracket straddles k = 0.
        lo[mask] = np.where((kl < 0) & (kh > 0), 0.0, np.minimum(kl**2, kh**2))
        hi[mask] = np.maximum(kl**2, kh**2)
    return lo, hi


def _negative_levels(
    sigma: float, L: float, tol: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Brackets and deviations ``eps + sigma^2`` for the two attractive levels."""
    s = abs(sigma)
    x = L * s
    lo = np.empty(2)
    hi = np.empty(2)
    dev = np.empty(2)

    # Even level: kappa = s + d with d = exp(-(s+d)L) (2s + d), a single root
    # in d in [0, 2s e^{-sL}/(1 - e^{-sL})].  The deviation forms are bisected
    # to full floating resolution so that d keeps its relative accuracy.
    def phi_even(d):
        return d - np.exp(-(s + d) * L) * (2 * s + d)

    d_up = 2 * s * math.exp(-x) / (-math.expm1(-x))
    dlo, dhi = _bisect(
        phi_even,
        np.array([0.0]),
        np.array([d_up]),
        lambda a, b: b - a,
        0.0,
    )
    d0 = 0.5 * (dlo[0] + dhi[0])
    # eps = -(s + d)^2, so eps + s^2 = -d (2s + d).
    lo[0] = -((s + dhi[0]) ** 2)
    hi[0] = -((s + dlo[0]) ** 2)
    dev[0] = -d0 * (2 * s + d0)

    if x >= _DEVIATION_FORM_THRESHOLD:
        # Odd level: kappa = s - d with d = exp(-(s-d)L) (2s - d); the trivial
        # root d = s is excluded by bracketing on [0, s/2].
        def phi_odd(d):
            return d - np.exp(-(s - d) * L) * (2 * s - d)

        dlo, dhi = _bisect(
            phi_odd,
            np.array([0.0]),
            np.array([0.5 * s]),
            lambda a, b: b - a,
            0.0,
        )
        d1 = 0.5 * (dlo[0] + dhi[0])
        lo[1] = -((s - dlo[0]) ** 2)
        hi[1] = -((s - dhi[0]) ** 2)
        dev[1] = d1 * (2 * s - d1)
    else:
        # Divide kappa(1 + e^{-kappa L}) - s(1 - e^{-kappa L}) by kappa to
        # remove the trivial root at kappa = 0.
        def g_odd(kappa):
            kl = kappa * L
            safe = np.where(kl == 0, 1.0, kl)
            ratio = np.where(kl == 0, 1.0, -np.expm1(-safe) / safe)
            return 1.0 + np.exp(-kl) - x * ratio

        klo, khi = _bisect(
            g_odd,
            np.array([0.0]),
            np.array([s]),
            _energy_width,
            0.5 * tol,
        )
        kappa = 0.5 * (klo[0] + khi[0])
        lo[1] = -(khi[0] ** 2)
        hi[1] = -(klo[0] ** 2)
        dev[1] = (s - kappa) * (s + kappa)
    return lo, hi, dev


def solve_1d_spectrum(
    sigma: BoundaryElasticity | float,
    L: float,
    n_max: int,
    tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> SpectrumTable:
    """Return the first ``n_max + 1`` eigenvalues with certified brackets.

    ``method="auto"`` uses the closed forms for Neumann and Dirichlet
    boundaries; ``method="roots"`` forces the bracketed root finder for every
    boundary, which is how the closed forms themselves are cross-checked.
    """
    boundary = sigma if isinstance(sigma, BoundaryElasticity) else BoundaryElasticity(float(sigma))
    if not L > 0:
        raise ValueError("L must be positive")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if method not in ("auto", "roots"):
        raise ValueError(f"unknown method {method!r}")
    if boundary.attractive and L * abs(boundary.sigma) <= 2:
        raise AssumptionViolated(
            f"attractive boundary needs L*|sigma| > 2, got {L * abs(boundary.sigma)}"
        )

    ns = np.arange(n_max + 1)
    closed = method == "auto" and (boundary.dirichlet_flag or boundary.is_neumann)
    if closed:
        offset = 1 if boundary.dirichlet_flag else 0
        eps = ((ns + offset) * math.pi / L) ** 2
        lo = eps.copy()
        hi = eps.copy()
        dev = eps.copy()
    elif boundary.attractive:
        nlo, nhi, ndev = _negative_levels(boundary.sigma, L, tol)
        plo, phi = _positive_levels(boundary, L, ns[2:], tol)
        lo = np.concatenate([nlo, plo])
        hi = np.concatenate([nhi, phi])
        eps = 0.5 * (lo + hi)
        dev = np.concatenate([ndev, eps[2:] + boundary.sigma**2])
    else:
        lo, hi = _positive_levels(boundary, L, ns, tol)
        eps = 0.5 * (lo + hi)
        dev = eps.copy()
    _certify(eps, lo, hi, tol)

    parity = tuple("even" if n % 2 == 0 else "odd" for n in ns)
    return SpectrumTable(
        L=float(L),
        boundary=boundary,
        eigenvalues=eps,
        brackets=np.column_stack([lo, hi]),
        parity=parity,
        deviations=dev,
        tol=tol,
    )


def spectrum_nd(table: SpectrumTable, k: Sequence[int]) -> float:
    """``eps_L(k) = sum_i eps_{k_i}`` for a mode index of any dimension."""
    k = tuple(int(x) for x in k)
    if any(x < 0 for x in k):
        raise ValueError("mode index components must be non-negative")
    if any(x > table.n_max for x in k):
        raise IndexOutOfRange(f"mode {k} exceeds n_max={table.n_max}")
    # Sum the small deviations first, then add the floor once per dimension.
    return float(math.fsum(table.deviations[x] for x in k) + len(k) * table.boundary.floor)


def excess_nd(table: SpectrumTable, k: Sequence[int]) -> float:
    """``eps_L(k) - eps_L(0)`` without cancellation."""
    exc = table.excess()
    k = tuple(int(x) for x in k)
    if any(x > table.n_max for x in k):
        raise IndexOutOfRange(f"mode {k} exceeds n_max={table.n_max}")
    return float(math.fsum(exc[x] for x in k))


@dataclass(frozen=True)
class SpacingCheck:
    description: str
    lower: float
    upper: float
    margin: float
    passed: bool


@dataclass(frozen=True)
class SpacingReport:
    checks: tuple[SpacingCheck, ...]
    exact_boundary_case: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[SpacingCheck]:
        return [c for c in self.checks if not c.passed]


def _check(desc: str, lower: float, upper: float, margin: float | None = None) -> SpacingCheck:
    m = upper - lower if margin is None else margin
    return SpacingCheck(desc, lower, upper, m, m > 0)


def verify_spacing(table: SpectrumTable) -> SpacingReport:
    """Evaluate the interleaving chain appropriate to the table's boundary.

    Margins of the two attractive levels against ``-sigma^2`` are taken from
    the cancellation-free deviations.
    """
    b = table.boundary
    eps = table.eigenvalues
    L = table.L
    grid = lambda j: (j * math.pi / L) ** 2  # noqa: E731
    checks: list[SpacingCheck] = []

    if b.is_neumann or b.dirichlet_flag:
        offset = 1 if b.dirichlet_flag else 0
        for n, e in enumerate(eps):
            target = grid(n + offset)
            err = abs(e - target)
            ok = err <= max(table.tol, 8 * np.spacing(max(abs(target), 1.0)))
            checks.append(SpacingCheck(f"eps_{n} == ({n + offset}pi/L)^2", e, target, -err, ok))
        return SpacingReport(tuple(checks), exact_boundary_case=True)

    if b.attractive:
        dev = table.deviations
        s2 = b.sigma**2
        checks.append(_check("eps_0 < -sigma^2", eps[0], -s2, -dev[0]))
        checks.append(_check("-sigma^2 < eps_1", -s2, eps[1], dev[1]))
        checks.append(_check("eps_1 < 0", eps[1], 0.0))
        if len(eps) > 2:
            checks.append(_check("0 < (pi/L)^2", 0.0, grid(1)))
        for n in range(2, len(eps)):
            checks.append(_check(f"({n - 1}pi/L)^2 < eps_{n}", grid(n - 1), eps[n]))
            checks.append(_check(f"eps_{n} < ({n}pi/L)^2", eps[n], grid(n)))
    else:
        checks.append(_check("0 < eps_0", 0.0, eps[0]))
        for n in range(len(eps)):
            if n > 0:
                checks.append(_check(f"({n}pi/L)^2 < eps_{n}", grid(n), eps[n]))
            checks.append(_check(f"eps_{n} < ({n + 1}pi/L)^2", eps[n], grid(n + 1)))
    return SpacingReport(tuple(checks))


def gap_asymptotics(sigma: float, L_list: Sequence[float]) -> list[tuple[float, float]]:
    """Signed deviations ``(eps_0 + sigma^2, eps_1 + sigma^2)`` for each L."""
    if not sigma < 0:
        raise AssumptionViolated("gap asymptotics need an attractive boundary (sigma < 0)")
    out = []
    for L in L_list:
        if L * abs(sigma) <= 2:
            raise AssumptionViolated(f"L*|sigma| = {L * abs(sigma)} <= 2")
        _, _, dev = _negative_levels(sigma, float(L), DEFAULT_TOL)
        out.append((float(dev[0]), float(dev[1])))
    return out


def levels_needed(boundary: BoundaryElasticity, L: float, budget: float) -> int:
    """Smallest ``n_max`` whose table is guaranteed to contain every level with
    ``eps_n - eps_0 <= budget``, using the chain lower bounds."""
    budget = max(budget, 0.0)
    # eps_n >= ((n - 1) pi / L)^2 in every case; eps_0 < 0 when attractive and
    # eps_0 <= (pi/L)^2 otherwise.
    top = budget if boundary.attractive else budget + (math.pi / L) ** 2
    return int(math.ceil(L * math.sqrt(top) / math.pi)) + 2
