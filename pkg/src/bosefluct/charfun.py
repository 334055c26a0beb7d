"""Finite-volume characteristic functions of fluctuation observables.

The quasi-free state is a product of geometric laws over the modes, and every
observable here is (after the Bogoliubov shift) a quadratic form plus at most
one linear term.  The quadratic form of ``N'_k`` couples only modes along the
shift-chains ``p, p+k, p+2k, ...``, so the characteristic function is a
product over chains of small determinants.

For one chain with thermal occupations ``n_j``, Hermitian matrix ``M =
U diag(lam) U^dagger`` and linear vector ``w``, the observable
``X = b^dagger M b + b^dagger w + w^dagger b`` has

    omega(e^{itX}) = exp(-xi^dagger (2 K - 1) xi / 2 + i Phi) / det(1 + R (1 - E))

with ``E = diag(e^{it lam})``, ``R = U^dagger diag(n) U``,
``K = (1 + R(1 - E))^{-1} (1 + R)``, and in the eigenbasis
``xi_j = w~_j (1 - e^{-it lam_j}) / lam_j`` and
``Phi = sum_j |w~_j|^2 (sin(t lam_j) - t lam_j) / lam_j^2`` where
``w~ = U^dagger w``.  This follows from moving the linear term into a
displacement, ``e^{itX} = e^{i Phi} e^{it b^dagger M b} W(xi)``, and the Gaussian
expectation of a Weyl operator times a quadratic exponential.  The Fock
oracle in this module checks it numerically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import cumulants as _cum
from .errors import (
    ChainTooLarge,
    CutoffTooSmall,
    IndexOutOfRange,
    ModeOutsideCutoff,
    SeriesRadiusExceeded,
    UnattainableEnergy,
)
from .observables import BareDensity, Field, FluctuationObservable, QPDensity
from .spectrum import SpectrumTable

DEFAULT_T_GRID = np.linspace(-8.0, 8.0, 161)
MAX_CHAIN = 1500
BLOCK = 256
CUT_OCCUPATION = 1.0
CHAIN_CUTOFF = 36.0  # occupations below e^{-36} do not register against 1 in double precision
_CHUNK_BYTES = 1 << 27
FOCK_MAX_DIM = 6000
FOCK_TOL = 1e-10
_SERIES_SMALL = 1e-3


@dataclass(frozen=True)
class CharFunSamples:
    """Samples of ``t -> omega(e^{itF})`` with a per-point error estimate."""

    t_grid: np.ndarray
    values: np.ndarray
    L: float
    method: str
    error_estimate: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t_grid, float)
        v = np.asarray(self.values, complex).copy()
        e = np.broadcast_to(np.asarray(self.error_estimate, float), t.shape).copy()
        v[t == 0] = 1.0
        e[t == 0] = 0.0
        for arr in (t, v, e):
            arr.setflags(write=False)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "error_estimate", e)

    def sup_distance(self, other: np.ndarray) -> float:
        return float(np.max(np.abs(self.values - np.asarray(other))))

    def hermitian_defect(self) -> float:
        """Largest ``|phi(-t) - conj(phi(t))|`` over grid points whose mirror is on the grid."""
        t = self.t_grid
        lookup = {float(x): i for i, x in enumerate(t)}
        worst = 0.0
        for i, x in enumerate(t):
            j = lookup.get(float(-x))
            if j is not None:
                worst = max(worst, abs(self.values[j] - np.conj(self.values[i])) - self.error_estimate[i] - self.error_estimate[j])
        return max(worst, 0.0)


def _grid(t_grid) -> np.ndarray:
    return DEFAULT_T_GRID.copy() if t_grid is None else np.asarray(t_grid, float).ravel()


def _density_scale(state, delta: float) -> float:
    return float(state.L) ** (-state.nu / 2 - delta)


def _expm1_i(theta: np.ndarray) -> np.ndarray:
    """``e^{i theta} - 1`` without cancellation at small theta."""
    s = np.sin(0.5 * theta)
    return -2.0 * s * s + 1j * np.sin(theta)


# ---------------------------------------------------------------------------
# Field


def charfun_field(obs: FluctuationObservable, state, schedule=None, t_grid=None) -> CharFunSamples:
    """``exp(-(t^2/4) L^{-2 delta} (1 + 2 n_L(k)))``, exact at finite L.

    ``1 + 2 n_L(k) = coth(beta (eps_L(k) - mu_L) / 2)``, evaluated in that form.
    """
    if not isinstance(obs.kind, Field):
        raise TypeError("charfun_field needs a Field observable")
    t = _grid(t_grid)
    x = state.excess_of(obs.k)
    var = float(state.L) ** (-2 * obs.delta) / math.tanh(0.5 * x) / 2.0
    return CharFunSamples(t, np.exp(-0.5 * var * t * t).astype(complex), state.L, "product", np.zeros_like(t))


def field_variance(obs: FluctuationObservable, state) -> float:
    """``L^{-2 delta} coth(x/2) / 2``, the Gaussian variance of the field fluctuation."""
    x = state.excess_of(obs.k)
    return float(state.L) ** (-2 * obs.delta) / math.tanh(0.5 * x) / 2.0


def check_attainable(E_target: float, boundary, nu: int) -> None:
    """Reject energies that no sequence of finite-L levels converges to.

    For sigma < 0 the limit points are ``-nu sigma^2`` and ``[-(nu-1) sigma^2, inf)``;
    otherwise ``[0, inf)``.
    """
    if boundary.attractive:
        s2 = boundary.sigma**2
        on_bottom = math.isclose(E_target, -nu * s2, rel_tol=1e-12, abs_tol=1e-12)
        if not on_bottom and E_target < -(nu - 1) * s2 - 1e-12:
            raise UnattainableEnergy(f"E={E_target} is not a limit point of the spectrum for sigma={boundary.sigma}")
    elif E_target < -1e-12:
        raise UnattainableEnergy(f"E={E_target} lies below the spectrum for sigma={boundary.label()}")


def select_mode_series(E_target: float, table: SpectrumTable, nu: int) -> tuple[int, ...]:
    """Mode ``k_L`` whose energy is closest to ``E_target``; ties go to the lexicographically first."""
    check_attainable(E_target, table.boundary, nu)
    e = np.asarray(table.eigenvalues, float)
    if nu * e[-1] < E_target and e[-1] - e[0] < E_target - (nu - 1) * e[0]:
        raise IndexOutOfRange("spectrum table too short to approach the target energy")
    energy = np.zeros((len(e),) * nu)
    for axis in range(nu):
        shape = [1] * nu
        shape[axis] = len(e)
        energy = energy + e.reshape(shape)
    dist = np.abs(energy - E_target)
    flat = int(np.argmin(dist))
    k = tuple(int(i) for i in np.unravel_index(flat, energy.shape))
    if max(k) == len(e) - 1:
        raise IndexOutOfRange("nearest mode sits at the edge of the spectrum table")
    return k


# ---------------------------------------------------------------------------
# Geometric product for k = 0


def _centered_geometric_log(n: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``sum_p log[e^{-i s n_p} / (1 - n_p (e^{is} - 1))]`` for each ``s``."""
    out = np.zeros(len(s), complex)
    em = _expm1_i(s)
    for start in range(0, len(n), 8192):
        nn = n[start : start + 8192][None, :]
        out += np.sum(-1j * s[:, None] * nn - np.log1p(-nn * em[:, None]), axis=1)
    return out


def charfun_qp_density_k0(obs: FluctuationObservable, state, t_grid=None) -> CharFunSamples:
    """Product over retained modes of the centred geometric characteristic function.

    The error estimate bounds the omitted modes: each factor differs from 1 by
    at most ``s^2 n (n + 1) / 2``, and the omitted occupations sum to at most
    the state's tail bound ``T``, giving ``(s^2/2) T (1 + T)``.
    """
    if not isinstance(obs.kind, QPDensity) or not obs.zero_mode:
        raise TypeError("charfun_qp_density_k0 needs QPDensity with k = 0")
    t = _grid(t_grid)
    s = t * _density_scale(state, obs.delta)
    n = np.asarray(state.occupation)[np.asarray(state.included)].astype(float)
    n = np.sort(n)  # fixed summation order
    values = np.exp(_centered_geometric_log(n, s))
    T = float(getattr(state, "tail_bound", 0.0))
    err = 0.5 * s * s * T * (1 + T)
    return CharFunSamples(t, values, state.L, "product", err)


# ---------------------------------------------------------------------------
# Chains


def quadratic_linear_charfun(occupations: Sequence[float], matrix: np.ndarray, linear: np.ndarray | None, t: np.ndarray) -> np.ndarray:
    """``omega(e^{itX})`` for ``X = b^dagger M b + b^dagger w + w^dagger b`` in a product thermal state.

    Uncentred.  ``occupations`` are the mean occupations ``n_j``.
    """
    n = np.asarray(occupations, float)
    M = np.asarray(matrix, complex)
    size = len(n)
    t = np.asarray(t, float)
    lam, U = np.linalg.eigh(M)
    R = U.conj().T @ (n[:, None] * U)
    step = max(1, _CHUNK_BYTES // (16 * size * size))
    return np.exp(
        np.concatenate([_ql_chunk(n, lam, U, R, linear, t[i : i + step]) for i in range(0, len(t), step)])
    )


def quadratic_linear_log(occupations, matrix, linear, t) -> np.ndarray:
    """Logarithm of :func:`quadratic_linear_charfun`, continuous in t on each chunk."""
    n = np.asarray(occupations, float)
    M = np.asarray(matrix, complex)
    size = len(n)
    t = np.asarray(t, float)
    lam, U = np.linalg.eigh(M)
    R = U.conj().T @ (n[:, None] * U)
    step = max(1, _CHUNK_BYTES // (16 * size * size))
    return np.concatenate([_ql_chunk(n, lam, U, R, linear, t[i : i + step]) for i in range(0, len(t), step)])


def _ql_chunk(n, lam, U, R, linear, t):
    size = len(n)
    theta = t[:, None] * lam[None, :]
    em = _expm1_i(theta)  # e^{it lam} - 1
    eye = np.eye(size)
    # 1 + R (1 - E) = 1 - R diag(e^{it lam} - 1)
    A = eye[None, :, :] - R[None, :, :] * em[:, None, :]
    sign, logdet = np.linalg.slogdet(A)
    log_phi = -(np.log(sign) + logdet)
    if linear is not None and np.any(linear):
        wt = U.conj().T @ np.asarray(linear, complex)
        y = 1j * theta
        small = np.abs(theta) < _SERIES_SMALL
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(small, 1 - y / 2 + y * y / 6 - y**3 / 24, -np.conj(em) / np.where(small, 1, y))
            # (1 - e^{-y}) / y with y = i t lam; -expm1(-i theta) = -conj(em)
            phi_r = np.where(
                small,
                -theta / 6 + theta**3 / 120 - theta**5 / 5040,
                (np.sin(theta) - theta) / np.where(small, 1, theta) ** 2,
            )
        xi = wt[None, :] * (1j * t[:, None]) * ratio
        Phi = (t * t) * np.sum(np.abs(wt[None, :]) ** 2 * phi_r, axis=1)
        rhs = ((eye + R)[None, :, :] @ xi[:, :, None])[:, :, 0]
        Kxi = np.linalg.solve(A, rhs[:, :, None])[:, :, 0]
        quad = 2 * np.sum(np.conj(xi) * Kxi, axis=1) - np.sum(np.abs(xi) ** 2, axis=1)
        log_phi = log_phi - 0.5 * quad + 1j * Phi
    return log_phi


def _chains(included: np.ndarray, k: tuple[int, ...], keep: np.ndarray) -> list[list[tuple[int, ...]]]:
    """Maximal runs ``p, p+k, ...`` of retained modes, starting at grid points with no predecessor."""
    shape = included.shape
    out = []
    for p in map(tuple, np.argwhere(keep)):
        prev = tuple(a - b for a, b in zip(p, k))
        if all(x >= 0 for x in prev) and keep[prev]:
            continue
        chain = [p]
        q = tuple(a + b for a, b in zip(p, k))
        while all(x < n for x, n in zip(q, shape)) and keep[q]:
            chain.append(q)
            q = tuple(a + b for a, b in zip(q, k))
        out.append(chain)
    return out


def _chain_matrix(size: int, coupling: float) -> np.ndarray:
    M = np.zeros((size, size))
    idx = np.arange(size - 1)
    M[idx, idx + 1] = coupling
    M[idx + 1, idx] = coupling
    return M


def _severed_estimate(state, k, keep, coupling: float) -> float:
    """``sqrt(omega(V^2))`` of the dropped hopping terms ``V``.

    A link ``(p, p+k)`` is dropped when either end is outside ``keep``;
    modes outside the grid count through the state's tail bound.
    """
    occ = np.where(state.included, np.asarray(state.occupation, float), 0.0)
    a = occ
    b = _cum._shifted(occ, k)
    keep_b = _cum._shifted(keep.astype(float), k) > 0
    inc_b = _cum._shifted(state.included.astype(float), k) > 0
    link = state.included & inc_b & ~(keep & keep_b)
    var = np.sum(np.where(link, a * (b + 1) + b * (a + 1), 0.0))
    T = float(getattr(state, "tail_bound", 0.0))
    edge = float(np.max(occ)) + 1.0
    var += 2.0 * T * edge
    return coupling * math.sqrt(2.0 * max(var, 0.0))


def _retained(state, chain_cutoff: float | None) -> np.ndarray:
    inc = np.asarray(state.included)
    if chain_cutoff is None:
        chain_cutoff = CHAIN_CUTOFF
    return inc & (np.asarray(state.excess) <= chain_cutoff)


def charfun_qp_density_k(
    obs: FluctuationObservable,
    state,
    t_grid=None,
    method: str = "determinant",
    chain_cutoff: float | None = None,
    n_max: int = _cum.N_MAX,
) -> CharFunSamples:
    """Characteristic function of ``F_{L,delta}(N'_k)`` for ``k != 0``.

    ``method="determinant"`` multiplies the exact chain determinants.
    ``method="cumulant-series"`` exponentiates the cumulant series up to
    ``n_max`` and refuses points beyond 0.8 of the estimated radius.
    """
    if not isinstance(obs.kind, QPDensity) or obs.zero_mode:
        raise TypeError("charfun_qp_density_k needs QPDensity with k != 0")
    t = _grid(t_grid)
    if method == "cumulant-series":
        return _cumulant_series(obs, state, t, n_max)
    if method != "determinant":
        raise ValueError(f"unknown method {method!r}")
    return _chain_product(obs, state, t, None, chain_cutoff)


def _chain_product(obs, state, t, linear_mode_weight, chain_cutoff) -> CharFunSamples:
    """Product of chain factors; ``linear_mode_weight`` is ``(mode, w)`` or None."""
    k = obs.k
    scale = _density_scale(state, obs.delta)
    zero = obs.zero_mode
    keep = _retained(state, chain_cutoff)
    occ = np.asarray(state.occupation, float)
    log_phi = np.zeros(len(t), complex)
    if zero:
        n_modes = occ[keep]
        lin_mode = linear_mode_weight[0] if linear_mode_weight else None
        if lin_mode is not None:
            if not keep[lin_mode]:
                raise ModeOutsideCutoff(f"mode {lin_mode} is outside the retained set")
            mask = keep.copy()
            mask[lin_mode] = False
            n_modes = occ[mask]
        log_phi += _centered_geometric_log(np.sort(n_modes), t * scale)
        if lin_mode is not None:
            n0 = occ[lin_mode]
            phi0 = quadratic_linear_charfun([n0], np.array([[scale]]), np.array([linear_mode_weight[1]]), t)
            log_phi += np.log(phi0) - 1j * t * scale * n0
        T = float(getattr(state, "tail_bound", 0.0))
        s = t * scale
        err = 0.5 * s * s * T * (1 + T)
        dropped = occ[np.asarray(state.included) & ~keep]
        err = err + 0.5 * s * s * float(np.sum(dropped * (dropped + 1)))
        return CharFunSamples(t, np.exp(log_phi), state.L, "product", err)
    coupling = 0.5 * scale
    chains = _chains(np.asarray(state.included), k, keep)
    lin_mode = linear_mode_weight[0] if linear_mode_weight else None
    found = lin_mode is None
    err = np.zeros(len(t))
    for chain in sorted(chains):
        n = np.array([occ[p] for p in chain])
        if len(chain) == 1 and (lin_mode is None or chain[0] != lin_mode):
            continue  # an isolated mode has no hopping term
        w = None
        if lin_mode is not None and lin_mode in chain:
            w = np.zeros(len(chain), complex)
            w[chain.index(lin_mode)] = linear_mode_weight[1]
            found = True
        lp, e = _chain_log(n, coupling, w, t)
        log_phi += lp
        err += e
    if not found:
        raise ModeOutsideCutoff(f"mode {lin_mode} is outside the retained set")
    err += np.abs(t) * _severed_estimate(state, k, keep, coupling)
    return CharFunSamples(t, np.exp(log_phi), state.L, "determinant", err)


def _split_points(n: np.ndarray) -> list[int]:
    """Cut positions ``j`` (link ``j, j+1`` severed) splitting a long chain into blocks.

    A block closes once it has ``BLOCK`` modes and reaches a link whose two
    occupations sum to at most ``CUT_OCCUPATION``.
    """
    cuts = []
    start = 0
    j = BLOCK - 1
    while j < len(n) - 1:
        while j < len(n) - 1 and n[j] + n[j + 1] > CUT_OCCUPATION:
            j += 1
        if j >= len(n) - 1:
            break
        if j + 1 - start > MAX_CHAIN:
            raise ChainTooLarge(f"no admissible cut within {MAX_CHAIN} modes")
        cuts.append(j)
        start = j + 1
        j = start + BLOCK - 1
    if len(n) - start > MAX_CHAIN:
        raise ChainTooLarge(f"chain block of {len(n) - start} modes exceeds the limit {MAX_CHAIN}")
    return cuts


def quadratic_cumulant(order: int, occupations: np.ndarray, matrix: np.ndarray) -> float:
    """Cumulant of ``b^dagger M b`` from the series of ``-log det(1 - N (e^{sM} - 1))``."""
    n = np.asarray(occupations, float)
    M = np.asarray(matrix, float)
    size = len(n)
    # A(s) = sum_{j>=1} s^j N M^j / j!, kept as coefficient matrices up to s^order.
    A = [np.zeros((size, size))]
    P = np.eye(size)
    for j in range(1, order + 1):
        P = P @ M
        A.append(n[:, None] * P / math.factorial(j))
    total = np.zeros(order + 1)
    power = [np.eye(size)] + [np.zeros((size, size))] * order  # A^0
    for m in range(1, order + 1):
        nxt = [np.zeros((size, size)) for _ in range(order + 1)]
        for a in range(order + 1):
            if not power[a].any():
                continue
            for b in range(1, order + 1 - a):
                nxt[a + b] = nxt[a + b] + power[a] @ A[b]
        power = nxt
        for d in range(order + 1):
            total[d] += np.trace(power[d]) / m
    return float(total[order] * math.factorial(order))


def _link_fourth(n: np.ndarray, j: int, coupling: float) -> float:
    """Mixed fourth cumulant between link ``(j, j+1)`` and the rest, on a local window."""
    lo, hi = max(j - 2, 0), min(j + 4, len(n))
    sub = n[lo:hi]
    full = _chain_matrix(len(sub), coupling)
    cut = full.copy()
    a = j - lo
    cut[a, a + 1] = cut[a + 1, a] = 0.0
    return abs(quadratic_cumulant(4, sub, full) - quadratic_cumulant(4, sub, cut))


def _chain_log(n: np.ndarray, coupling: float, w, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log characteristic function of one chain and its error estimate.

    Chains up to ``BLOCK`` modes are exact.  Longer ones are cut into blocks
    at weakly occupied links.  A cut link ``V`` is uncorrelated with every other
    term at second order, so ``-t^2 Var(V)/2`` restores the second cumulant
    exactly; third cumulants vanish, and the mixed fourth cumulant, computed
    on a local window, is the error estimate.
    """
    if len(n) <= BLOCK:
        return quadratic_linear_log(n, _chain_matrix(len(n), coupling), w, t), np.zeros(len(t))
    cuts = _split_points(n)
    bounds = [0] + [c + 1 for c in cuts] + [len(n)]
    log_phi = np.zeros(len(t), complex)
    for a, b in zip(bounds, bounds[1:]):
        wb = None if w is None else w[a:b]
        if b - a == 1 and (wb is None or not np.any(wb)):
            continue
        log_phi += quadratic_linear_log(n[a:b], _chain_matrix(b - a, coupling), wb, t)
    fourth = 0.0
    for j in cuts:
        var = coupling**2 * (n[j] * (n[j + 1] + 1) + n[j + 1] * (n[j] + 1))
        log_phi += -0.5 * var * t * t
        fourth += _link_fourth(n, j, coupling)
    return log_phi, 2.0 * fourth * t**4 / 24.0


def _cumulant_series(obs, state, t, n_max) -> CharFunSamples:
    kappa = [float(x) for x in _cum.fluctuation_cumulants(n_max, obs, state, n_max)]
    coef = [kappa[j] / math.factorial(j + 1) for j in range(n_max)]
    nz = [j for j, c in enumerate(coef) if abs(c) > 0]
    if len(nz) >= 2:
        hi, lo = nz[-1], nz[-2]
        radius = (abs(coef[lo]) / abs(coef[hi])) ** (1.0 / (hi - lo))
    else:
        radius = math.inf
    limit = 0.8 * radius
    if np.any(np.abs(t) > limit):
        raise SeriesRadiusExceeded(f"|t| up to {np.max(np.abs(t)):.3g} exceeds the trust region {limit:.3g}")
    log_phi = np.zeros(len(t), complex)
    for j, c in enumerate(coef):
        log_phi += c * (1j * t) ** (j + 1)
    values = np.exp(log_phi)
    last = abs(coef[nz[-1]]) * np.abs(t) ** (nz[-1] + 1) if nz else np.zeros_like(t)
    return CharFunSamples(t, values, state.L, "cumulant-series", np.abs(values) * last)


# ---------------------------------------------------------------------------
# Bare density


def linear_coefficient(obs: FluctuationObservable, state) -> complex:
    """Coefficient ``w`` of ``b^dagger(k) w + h.c.`` in ``F_{L,delta}(N_k)``.

    The shift ``a(0) = b(0) + s`` with ``s = L^gamma h e^{i phi}/(eps_L(0) - mu_L)``
    turns ``(a^dagger(0) a(k) + h.c.)/2`` into ``(s^* b(k) + s b^dagger(k))/2``
    plus quadratic terms.  For k = 0 the term is ``s^* b(0) + s b^dagger(0)``.
    """
    scale = _density_scale(state, obs.delta)
    s = complex(state.shift)
    return scale * s * (1.0 if obs.zero_mode else 0.5)


def charfun_bare_density(obs: FluctuationObservable, state, schedule=None, t_grid=None, chain_cutoff: float | None = None) -> CharFunSamples:
    """Characteristic function of the bare density fluctuation ``F_{L,delta}(N_k)``.

    Quasi-particle chains times the chain through mode ``k`` (mode 0 for
    ``k = 0``), which also carries the linear term from the condensate shift.
    """
    if not isinstance(obs.kind, BareDensity):
        raise TypeError("charfun_bare_density needs a BareDensity observable")
    t = _grid(t_grid)
    qp = FluctuationObservable(QPDensity(obs.k), obs.delta)
    w = linear_coefficient(qp, state)
    mode = obs.k
    if w == 0:
        if qp.zero_mode:
            return _chain_product(qp, state, t, None, chain_cutoff)
        return _chain_product(qp, state, t, None, chain_cutoff)
    return _chain_product(qp, state, t, (mode, w), chain_cutoff)


def charfun(obs: FluctuationObservable, state, t_grid=None, method: str | None = None) -> CharFunSamples:
    """Dispatch on the observable kind."""
    if isinstance(obs.kind, Field):
        return charfun_field(obs, state, None, t_grid)
    if isinstance(obs.kind, QPDensity):
        if obs.zero_mode:
            return charfun_qp_density_k0(obs, state, t_grid)
        return charfun_qp_density_k(obs, state, t_grid, method or "determinant")
    return charfun_bare_density(obs, state, None, t_grid)


# ---------------------------------------------------------------------------
# Truncated Fock space oracle


def _ladder(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)


def fock_oracle(
    occupations: Sequence[float],
    matrix: np.ndarray | None,
    linear: Sequence[complex] | None,
    boson_cutoff: int,
    t_grid=None,
    tol: float = FOCK_TOL,
) -> CharFunSamples:
    """``trace(rho e^{itX})`` in the Fock space truncated at ``boson_cutoff`` quanta per mode.

    ``rho`` is the product of geometric weights ``(1 - q) q^m`` restricted to
    the truncated space (not renormalised), ``X`` the truncated matrix of
    ``b^dagger M b + b^dagger w + w^dagger b``.  The error estimate is twice the
    discarded thermal weight; above ``tol`` the call fails.
    """
    n = np.asarray(occupations, float)
    modes = len(n)
    if not 1 <= modes <= 3:
        raise ValueError("the Fock oracle handles one to three modes")
    if boson_cutoff > 60:
        raise ValueError("boson cutoff is capped at 60")
    dim = (boson_cutoff + 1) ** modes
    if dim > FOCK_MAX_DIM:
        raise ValueError(f"truncated dimension {dim} exceeds {FOCK_MAX_DIM}")
    t = _grid(t_grid)
    q = n / (1.0 + n)
    kept = np.prod(-np.expm1((boson_cutoff + 1) * np.log(q)))
    discarded = float(1.0 - kept)
    if discarded > tol:
        raise CutoffTooSmall(f"discarded thermal weight {discarded:.3g} exceeds {tol:.3g}")
    local = boson_cutoff + 1
    a1 = _ladder(boson_cutoff)
    eye = np.eye(local)

    def embed(op: np.ndarray, j: int) -> np.ndarray:
        out = np.array([[1.0]])
        for i in range(modes):
            out = np.kron(out, op if i == j else eye)
        return out

    b = [embed(a1, j) for j in range(modes)]
    X = np.zeros((dim, dim), complex)
    if matrix is not None:
        M = np.asarray(matrix, complex)
        for i, j in itertools.product(range(modes), repeat=2):
            if M[i, j] != 0:
                X += M[i, j] * (b[i].T @ b[j])
    if linear is not None:
        w = np.asarray(linear, complex)
        for j in range(modes):
            if w[j] != 0:
                X += w[j] * b[j].T + np.conj(w[j]) * b[j]
    X = 0.5 * (X + X.conj().T)
    weights = np.array([1.0])
    for j in range(modes):
        wj = (1 - q[j]) * q[j] ** np.arange(local)
        weights = np.kron(weights, wj)
    evals, V = np.linalg.eigh(X)
    # trace(rho V e^{it evals} V^dagger) = sum_a e^{it evals_a} (V^dagger rho V)_aa
    diag = np.einsum("ia,i,ia->a", V.conj(), weights, V).real
    values = np.exp(1j * np.outer(t, evals)) @ diag
    return CharFunSamples(t, values, 1.0, "fock-oracle", np.full(t.shape, 2 * discarded))
