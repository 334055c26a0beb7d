"""Limit laws, convergence sweeps, exponent fits and the (alpha, gamma) region map."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from . import charfun as _cf
from . import cumulants as _cum
from ._parallel import parallel_map
from .errors import InsufficientDivergence, InvalidSchedule, NotCovered
from .observables import BareDensity, Field, FluctuationObservable, QPDensity, sigma_multiplicity
from .special import bose_fluctuation_integral, thermal_wavelength
from .thermo import FixedMu, GasState, Phase, Scaled, ThermoSchedule, classify_phase, prepare_state


class ExtrapolationWarning(UserWarning):
    """A declared law extends a theorem beyond the cases it states."""


# ---------------------------------------------------------------------------
# Closed-form laws


@dataclass(frozen=True)
class Gaussian:
    variance: float

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        return np.exp(-0.5 * self.variance * t * t).astype(complex)

    def descriptor(self) -> str:
        return f"Gaussian(variance={self.variance:.17g})"


@dataclass(frozen=True)
class CauchyPower:
    scale: float
    exponent: float

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        return ((1.0 + (t / self.scale) ** 2) ** (-self.exponent)).astype(complex)

    def descriptor(self) -> str:
        return f"CauchyPower(scale={self.scale:.17g},exponent={self.exponent:.17g})"


@dataclass(frozen=True)
class GammaPower:
    scale: float
    exponent: float

    def __call__(self, t) -> np.ndarray:
        u = 1j * np.asarray(t, float) / self.scale
        return np.exp(self.exponent * (-u - np.log1p(-u)))

    def descriptor(self) -> str:
        return f"GammaPower(scale={self.scale:.17g},exponent={self.exponent:.17g})"


@dataclass(frozen=True)
class Product:
    factors: tuple

    def __call__(self, t) -> np.ndarray:
        out = np.ones(np.shape(t), complex)
        for f in self.factors:
            out = out * f(t)
        return out

    def descriptor(self) -> str:
        return "*".join(f.descriptor() for f in self.factors)


LimitLaw = Union[Gaussian, CauchyPower, GammaPower, Product]


@dataclass(frozen=True)
class FiniteVolumeLaw:
    """Wraps precomputed samples so a finite-L law can serve as its own 'limit'."""

    samples: _cf.CharFunSamples

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        if t.shape != self.samples.t_grid.shape or np.any(t != self.samples.t_grid):
            raise ValueError("finite-volume law is only known on its own grid")
        return self.samples.values

    def descriptor(self) -> str:
        return f"FiniteVolume(L={self.samples.L:.17g})"


# ---------------------------------------------------------------------------
# Exact predicates


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(float(x)))


@dataclass(frozen=True)
class RegionLabel:
    region: int
    declared_delta: float
    declared_law: str


_REGION_LAWS = {
    1: "Gaussian(zeta(z*)/2)",
    2: "Gaussian(zeta(z*)/2)*CauchyPower(2*beta*c, sigma(k))",
    3: "CauchyPower(2*beta*c, sigma(k))",
    4: "Gaussian(h^2/(2*beta*c^3))",
}


def _region_exact(a: Fraction, g: Fraction, nu: int) -> tuple[int, Fraction]:
    half = Fraction(nu, 2)
    if not -half < g < half:
        raise InvalidSchedule(f"gamma={g} outside (-nu/2, nu/2)")
    if not 0 < a <= half - g:
        raise InvalidSchedule(f"alpha={a} outside (0, nu/2 - gamma]")
    hits = []
    if a < half and 3 * a < nu - 2 * g:
        hits.append((1, Fraction(0)))
    if a == half and a + 2 * g < 0:
        hits.append((2, Fraction(0)))
    if a > half and a + 2 * g < 0:
        hits.append((3, a - half))
    if 3 * a > nu - 2 * g and a + 2 * g > 0:
        hits.append((4, g + Fraction(3, 2) * a - half))
    if len(hits) != 1:
        raise NotCovered(f"(alpha, gamma)=({a}, {g}) lies on a boundary not covered by the four regions")
    return hits[0]


def region_classify(alpha, gamma, nu: int) -> RegionLabel:
    """Region of the bare low-mode density law; exact rational predicates."""
    region, delta = _region_exact(_exact(alpha), _exact(gamma), int(nu))
    return RegionLabel(region, float(delta), _REGION_LAWS[region])


def region_delta_exact(alpha, gamma, nu: int) -> Fraction:
    return _region_exact(_exact(alpha), _exact(gamma), int(nu))[1]


# ---------------------------------------------------------------------------
# Declared laws


def fluctuation_zeta(nu: int, z: float, beta: float) -> float:
    """``zeta(z) = lambda^{-nu}`` times the orthant integral of ``f + f^2``."""
    return bose_fluctuation_integral(nu, z).value / thermal_wavelength(beta) ** nu


def _is_energy(E: float, target: float) -> bool:
    return math.isclose(E, target, rel_tol=1e-12, abs_tol=1e-12)


def _coth_half(x: float) -> float:
    return 1.0 / math.tanh(0.5 * x)


def _field_law(schedule: ThermoSchedule, E: float | None) -> tuple[float, LimitLaw]:
    if E is None:
        raise ValueError("field laws need a target energy E")
    _cf.check_attainable(E, schedule.sigma, schedule.nu)
    beta = schedule.beta
    mode = schedule.mu_mode
    if isinstance(mode, FixedMu):
        return 0.0, Gaussian(_coth_half(beta * (E - mode.mu)) / 2)
    mu_star = schedule.mu_star
    if _is_energy(E, mu_star):
        return mode.alpha / 2, Gaussian(1.0 / (beta * mode.c))
    if not schedule.sigma.attractive:
        warnings.warn(
            "coth law for E != mu* with sigma >= 0 is assumed by continuity", ExtrapolationWarning, stacklevel=3
        )
    return 0.0, Gaussian(_coth_half(beta * (E - mu_star)) / 2)


def _low(k: Sequence[int]) -> bool:
    return any(k) and all(x <= 1 for x in k)


def _require_attractive(schedule: ThermoSchedule) -> None:
    if not schedule.sigma.attractive:
        raise NotCovered("density limit laws in scaled schedules are stated for sigma < 0")


def _density_phase(schedule: ThermoSchedule) -> tuple[Phase, float]:
    phase = classify_phase(schedule)
    if phase is Phase.NORMAL:
        return phase, schedule.fugacity
    _require_attractive(schedule)
    return phase, schedule.z_star


def _qp_law(obs: FluctuationObservable, schedule: ThermoSchedule) -> tuple[float, LimitLaw]:
    phase, z = _density_phase(schedule)
    nu, beta = schedule.nu, schedule.beta
    zeta = fluctuation_zeta(nu, z, beta)
    k = obs.k
    zero = not any(k)
    gauss = Gaussian(zeta if zero else zeta / 2)
    if phase is Phase.NORMAL or (not zero and not _low(k)):
        return 0.0, gauss
    a = _exact(schedule.mu_mode.alpha)
    half = Fraction(nu, 2)
    bc = beta * schedule.mu_mode.c
    special = GammaPower(bc, 2.0**nu) if zero else CauchyPower(2 * bc, float(sigma_multiplicity(k)))
    if a < half:
        return 0.0, gauss
    if a == half:
        return 0.0, Product((gauss, special))
    return float(a - half), special


def _bare_high_law(obs, schedule: ThermoSchedule, phase: Phase, z: float) -> tuple[float, LimitLaw]:
    nu, beta = schedule.nu, schedule.beta
    zeta = fluctuation_zeta(nu, z, beta)
    if phase is not Phase.CONDENSED:
        return 0.0, Gaussian(zeta / 2)
    s2 = schedule.sigma.sigma**2
    high = sum(1 for x in obs.k if x >= 2)
    if high != nu:
        warnings.warn(
            "mixed high/low mode: coth argument generalised to beta*sigma^2*#{k_i >= 2}",
            ExtrapolationWarning,
            stacklevel=3,
        )
    return 0.0, Gaussian((2 * zeta + schedule.rho0 * _coth_half(beta * high * s2)) / 4)


def _bare_law(obs: FluctuationObservable, schedule: ThermoSchedule) -> tuple[float, LimitLaw]:
    phase, z = _density_phase(schedule)
    nu, beta = schedule.nu, schedule.beta
    k = obs.k
    zero = not any(k)
    if not zero and not _low(k):
        return _bare_high_law(obs, schedule, phase, z)
    zeta = fluctuation_zeta(nu, z, beta)
    gauss = Gaussian(zeta if zero else zeta / 2)
    if phase is Phase.NORMAL:
        return 0.0, gauss
    mode = schedule.mu_mode
    if schedule.h == 0:
        return _qp_law(FluctuationObservable(QPDensity(k), obs.delta), schedule)
    region, delta = _region_exact(_exact(mode.alpha), _exact(schedule.gamma), nu)
    bc = beta * mode.c
    special = GammaPower(bc, 2.0**nu) if zero else CauchyPower(2 * bc, float(sigma_multiplicity(k)))
    if region == 1:
        return 0.0, gauss
    if region == 2:
        return 0.0, Product((gauss, special))
    if region == 3:
        return float(delta), special
    # The k = 0 linear term carries no 1/2, hence four times the low-k variance.
    factor = 2.0 if zero else 0.5
    return float(delta), Gaussian(factor * schedule.h**2 / (beta * mode.c**3))


def limit_law(obs: FluctuationObservable, schedule: ThermoSchedule, E_target: float | None = None) -> tuple[float, LimitLaw]:
    """Declared scaling exponent ``delta`` and limiting characteristic function."""
    if isinstance(obs.kind, Field):
        schedule.validate()
        return _field_law(schedule, E_target)
    if isinstance(obs.kind, QPDensity):
        return _qp_law(obs, schedule)
    return _bare_law(obs, schedule)


def region4_variance(beta: float, c: float, h: float, zero_mode: bool = False) -> float:
    """Region-4 variance ``h^2/(2 beta c^3)`` (``2 h^2/(beta c^3)`` for k = 0)."""
    return (2.0 if zero_mode else 0.5) * h * h / (beta * c**3)


def region4_variance_condensed(beta: float, h: float, rho0: float, zero_mode: bool = False) -> float:
    """The same variance with ``c = h/sqrt(rho0)``: ``h^2/c^3 = rho0^{3/2}/h``."""
    return (2.0 if zero_mode else 0.5) * rho0**1.5 / (beta * h)


# ---------------------------------------------------------------------------
# Sweeps


def _resolve_observable(obs: FluctuationObservable, state: GasState, E_target: float | None, nu: int) -> FluctuationObservable:
    if isinstance(obs.kind, Field) and E_target is not None:
        k = _cf.select_mode_series(E_target, state.table, nu)
        return FluctuationObservable(Field(k, obs.kind.sign), obs.delta)
    return obs


@dataclass(frozen=True)
class ConvergenceReport:
    L_list: tuple[float, ...]
    distances: tuple[float, ...]
    order: float
    monotone_tail: bool
    delta: float
    law: str
    samples: tuple = ()

    @property
    def final(self) -> float:
        return self.distances[-1]


def _fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def convergence_study(
    obs: FluctuationObservable,
    schedule: ThermoSchedule,
    L_list: Sequence[float],
    t_grid=None,
    E_target: float | None = None,
    law=None,
    delta: float | None = None,
    mode_cutoff: float | None = None,
    method: str | None = None,
) -> ConvergenceReport:
    """Sup-norm distance of the finite-L characteristic function to the declared law.

    ``law`` and ``delta`` default to :func:`limit_law`.  ``law`` may also be a
    callable of ``(L, t)`` returning the comparison values at each L.
    """
    L_list = [float(L) for L in L_list]
    if len(L_list) < 3 or any(b <= a for a, b in zip(L_list, L_list[1:])):
        raise ValueError("L_list must be increasing with at least three entries")
    t = _cf._grid(t_grid)
    if law is None or delta is None:
        d_decl, l_decl = limit_law(obs, schedule, E_target)
        delta = d_decl if delta is None else delta
        law = l_decl if law is None else law
    obs = obs.with_delta(delta)
    kwargs = {} if mode_cutoff is None else {"mode_cutoff": mode_cutoff}

    def cell(L: float):
        state = prepare_state(schedule, L, **kwargs)
        o = _resolve_observable(obs, state, E_target, schedule.nu)
        return _cf.charfun(o, state, t, method)

    samples = parallel_map(cell, L_list)
    dist = []
    for L, smp in zip(L_list, samples):
        ref = law(L, t) if getattr(law, "per_L", False) else law(t)
        dist.append(smp.sup_distance(ref))
    positive = [(L, d) for L, d in zip(L_list, dist) if d > 0]
    order = -_fit_slope(*zip(*positive)) if len(positive) >= 2 else math.inf
    tail = dist[len(dist) // 2 :] if len(dist) >= 4 else dist[-2:]
    monotone = all(b <= a for a, b in zip(tail, tail[1:]))
    desc = law.descriptor() if hasattr(law, "descriptor") else repr(law)
    return ConvergenceReport(tuple(L_list), tuple(dist), order, monotone, float(delta), desc, tuple(samples))


def raw_variance(obs: FluctuationObservable, state: GasState) -> float:
    """Variance of the fluctuation observable at its own ``delta`` at finite L."""
    if isinstance(obs.kind, Field):
        return _cf.field_variance(obs, state)
    qp = FluctuationObservable(QPDensity(obs.k), obs.delta)
    var = float(_cum.fluctuation_cumulant(2, qp, state))
    if isinstance(obs.kind, BareDensity):
        w = _cf.linear_coefficient(qp, state)
        mode = obs.k
        var += abs(w) ** 2 * (1 + 2 * state.occupation_of(mode))
    return var


@dataclass(frozen=True)
class ExponentFit:
    delta: float
    slope: float
    L_list: tuple[float, ...]
    variances: tuple[float, ...]


DIVERGENCE_THRESHOLD = 0.02


def exponent_extraction(
    obs: FluctuationObservable,
    schedule: ThermoSchedule,
    L_list: Sequence[float],
    E_target: float | None = None,
    mode_cutoff: float | None = None,
) -> ExponentFit:
    """Half the log-log slope of the unscaled (delta = 0) variance against L."""
    L_list = [float(L) for L in L_list]
    if len(L_list) < 2:
        raise ValueError("need at least two sizes")
    base = obs.with_delta(0.0)
    kwargs = {} if mode_cutoff is None else {"mode_cutoff": mode_cutoff}

    def cell(L: float) -> float:
        state = prepare_state(schedule, L, **kwargs)
        return raw_variance(_resolve_observable(base, state, E_target, schedule.nu), state)

    var = parallel_map(cell, L_list)
    slope = _fit_slope(L_list, var)
    if slope / 2 < DIVERGENCE_THRESHOLD:
        raise InsufficientDivergence(f"variance grows with exponent {slope:.3g}; normal scaling")
    return ExponentFit(slope / 2, slope, tuple(L_list), tuple(var))


def scaled_schedule(beta: float, nu: int, sigma: float, c: float, alpha: float, h: float = 0.0, gamma: float = 0.0, phi: float = 0.0) -> ThermoSchedule:
    return ThermoSchedule(beta=beta, nu=nu, sigma=sigma, mu_mode=Scaled(c, alpha), h=h, gamma=gamma, phi=phi)
