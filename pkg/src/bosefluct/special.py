"""Bose (Jonquiere) functions with certified remainders.

Two normalisations appear in the density formulas and both are exposed:

* ``jonquiere_series(s, z)`` is ``sum_{n>=1} z^n / n^s``;
* ``jonquiere_integral(nu, z)`` is the integral of ``z e^{-x^2} / (1 - z e^{-x^2})``
  over the positive orthant of R^nu.

Expanding the integrand as ``sum_n z^n e^{-n x^2}`` and integrating term by
term shows ``jonquiere_integral(nu, z) = (sqrt(pi)/2)^nu * jonquiere_series(nu/2, z)``.
Densities in :mod:`bosefluct.thermo` use the integral form together with
``thermal_wavelength(beta) = pi*sqrt(beta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergentSeries

REL_TOL = 1e-10
_EPS = np.finfo(float).eps
_CHUNK = 4096


@dataclass(frozen=True)
class JonquiereValue:
    """A series value together with a bound on its distance to the exact sum."""

    s: float
    z: float
    value: float
    tail_bound: float

    @property
    def interval(self) -> tuple[float, float]:
        return self.value - self.tail_bound, self.value + self.tail_bound


def _check_fugacity(z: float) -> None:
    if not 0 < z <= 1:
        raise ValueError(f"fugacity must lie in (0, 1], got {z}")


def _geometric_sum(s: float, z: float, weight_power: float, rel_tol: float) -> tuple[float, float]:
    """Sum ``z^n n^{weight_power - s}`` for z < 1 with a geometric tail bound."""
    p = weight_power - s
    log_z = math.log(z)
    partial = 0.0
    start = 1
    while True:
        n = np.arange(start, start + _CHUNK, dtype=float)
        terms = np.exp(n * log_z + p * np.log(n))
        partial += float(np.sum(terms))
        last = start + _CHUNK - 1
        # Term ratio a_{n+1}/a_n = z (1 + 1/n)^p, bounded for n > last.
        ratio = z * (1.0 + 1.0 / (last + 1)) ** max(p, 0.0)
        if ratio < 1.0:
            nxt = math.exp((last + 1) * log_z + p * math.log(last + 1))
            tail = nxt / (1.0 - ratio)
            if tail <= rel_tol * abs(partial):
                break
        start = last + 1
    rounding = 4.0 * math.log2(last + 1) * _EPS * abs(partial)
    return partial, float(tail + rounding)


def _zeta_sum(p: float, rel_tol: float) -> tuple[float, float]:
    """Sum ``n^{-p}`` for p > 1 with a convexity bracket on the tail.

    For a convex decreasing f the tail beyond N lies between
    ``int_N^inf f - f(N)/2`` (trapezoid) and ``int_{N+1/2}^inf f`` (midpoint).
    """
    N = 1024
    while True:
        n = np.arange(1, N + 1, dtype=float)
        partial = float(np.sum(n ** (-p)))
        lower = N ** (1 - p) / (p - 1) - 0.5 * N ** (-p)
        upper = (N + 0.5) ** (1 - p) / (p - 1)
        value = partial + 0.5 * (lower + upper)
        half = 0.5 * (upper - lower)
        rounding = 4.0 * math.log2(N) * _EPS * value
        if half + rounding <= rel_tol * value:
            return value, float(half + rounding)
        N *= 4


def jonquiere_series(s: float, z: float, rel_tol: float = REL_TOL) -> JonquiereValue:
    """``sum_{n>=1} z^n / n^s`` for ``0 < z <= 1`` (``s > 1`` required at z = 1)."""
    _check_fugacity(z)
    if z == 1:
        if s <= 1:
            raise DivergentSeries(f"sum n^-s diverges at z=1 for s={s} <= 1")
        value, bound = _zeta_sum(s, rel_tol)
    else:
        value, bound = _geometric_sum(s, z, 0.0, rel_tol)
    return JonquiereValue(float(s), float(z), value, bound)


def _orthant_gaussian(nu: int, n: float) -> float:
    """Integral of ``exp(-n x^2)`` over the positive orthant of R^nu."""
    return (0.5 * math.sqrt(math.pi / n)) ** nu


def jonquiere_integral(nu: int, z: float, rel_tol: float = REL_TOL) -> JonquiereValue:
    """Orthant integral of the Bose factor ``z e^{-x^2}/(1 - z e^{-x^2})``.

    Each term ``z^n e^{-n x^2}`` of the geometric expansion is a Gaussian
    orthant integral, so the sum is the series of order ``nu/2`` weighted by
    ``(sqrt(pi)/2)^nu``.
    """
    if nu < 1:
        raise ValueError("dimension must be at least 1")
    _check_fugacity(z)
    if z == 1 and nu < 3:
        raise DivergentSeries(f"the orthant integral diverges at z=1 for nu={nu} < 3")
    base = jonquiere_series(nu / 2, z, rel_tol)
    scale = _orthant_gaussian(nu, 1.0)
    return JonquiereValue(nu / 2, float(z), scale * base.value, scale * base.tail_bound)


def bose_fluctuation_integral(nu: int, z: float, rel_tol: float = REL_TOL) -> JonquiereValue:
    """Orthant integral of ``f + f^2`` with ``f = z e^{-x^2}/(1 - z e^{-x^2})``.

    Since ``f (1 + f) = sum_n n z^n e^{-n x^2}``, term-wise integration gives
    ``(sqrt(pi)/2)^nu * sum_n z^n n^{1 - nu/2}``.  At z = 1 this needs nu > 4.
    """
    if nu < 1:
        raise ValueError("dimension must be at least 1")
    _check_fugacity(z)
    s = nu / 2 - 1
    if z == 1:
        if s <= 1:
            raise DivergentSeries(f"the squared Bose integral diverges at z=1 for nu={nu}")
        value, bound = _zeta_sum(s, rel_tol)
    else:
        value, bound = _geometric_sum(nu / 2, z, 1.0, rel_tol)
    scale = _orthant_gaussian(nu, 1.0)
    return JonquiereValue(s, float(z), scale * value, scale * bound)


def thermal_wavelength(beta: float) -> float:
    """Length ``pi*sqrt(beta)`` that turns the orthant integrals into densities."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return math.pi * math.sqrt(beta)
