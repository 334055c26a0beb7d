"""Chemical-potential schedules and the finite-volume quasi-free state.

A state is stored on a dense grid of mode indices ``k in {0..n-1}^nu``; modes
with ``beta (eps_L(k) - mu_L) > cutoff`` are marked excluded and their total
occupation is covered by a certified bound.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import erfc

from .errors import IndexOutOfRange, InvalidSchedule, ModeOutsideCutoff
from .special import jonquiere_integral, thermal_wavelength
from .spectrum import BoundaryElasticity, SpectrumTable, levels_needed, solve_1d_spectrum

DEFAULT_CUTOFF = 40.0
# Tolerance used to decide alpha == nu/2 - gamma for float inputs.
EXPONENT_ATOL = 1e-12


@dataclass(frozen=True)
class FixedMu:
    mu: float


@dataclass(frozen=True)
class Scaled:
    """``mu_L = eps_L(0) - c L^{-alpha}``."""

    c: float
    alpha: float

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise InvalidSchedule(f"c must be positive, got {self.c}")
        if not self.alpha > 0:
            raise InvalidSchedule(f"alpha must be positive, got {self.alpha}")


MuMode = Union[FixedMu, Scaled]


class Phase(enum.Enum):
    NORMAL = "normal"
    CRITICAL = "critical"
    CONDENSED = "condensed"


@dataclass(frozen=True)
class ThermoSchedule:
    """Temperature, geometry, external field and chemical-potential schedule.

    Structural checks run on construction; the domain conditions that depend
    on several fields together are enforced by :meth:`validate`.
    """

    beta: float
    nu: int
    sigma: BoundaryElasticity
    mu_mode: MuMode
    h: float = 0.0
    gamma: float = 0.0
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.sigma, BoundaryElasticity):
            object.__setattr__(self, "sigma", BoundaryElasticity(float(self.sigma)))
        if not self.beta > 0:
            raise InvalidSchedule(f"beta must be positive, got {self.beta}")
        if int(self.nu) != self.nu or self.nu < 1:
            raise InvalidSchedule(f"nu must be a positive integer, got {self.nu}")
        object.__setattr__(self, "nu", int(self.nu))
        if self.h < 0:
            raise InvalidSchedule(f"h must be non-negative, got {self.h}")
        # Without a field, gamma only sets the admissible alpha range.
        if self.h > 0 and not -self.nu / 2 < self.gamma < self.nu / 2:
            raise InvalidSchedule(f"gamma={self.gamma} outside (-nu/2, nu/2)")

    @classmethod
    def condensed(
        cls,
        beta: float,
        nu: int,
        sigma: BoundaryElasticity | float,
        h: float,
        rho0: float,
        gamma: float = 0.0,
        phi: float = 0.0,
    ) -> "ThermoSchedule":
        """Schedule with ``alpha = nu/2 - gamma`` and ``c = h/sqrt(rho0)``."""
        if not (h > 0 and rho0 > 0):
            raise InvalidSchedule("condensed schedule needs h > 0 and rho0 > 0")
        mode = Scaled(c=h / math.sqrt(rho0), alpha=nu / 2 - gamma)
        if not isinstance(sigma, BoundaryElasticity):
            sigma = BoundaryElasticity(float(sigma))
        return cls(beta=beta, nu=nu, sigma=sigma, mu_mode=mode, h=h, gamma=gamma, phi=phi)

    @property
    def mu_star(self) -> float:
        """Limit of ``eps_L(0)``: ``-nu sigma^2`` if attractive, else 0."""
        return self.nu * self.sigma.floor

    @property
    def alpha_star(self) -> float:
        return self.nu / 2 - self.gamma

    @property
    def z_star(self) -> float:
        return math.exp(self.beta * self.mu_star)

    @property
    def fugacity(self) -> float:
        """Limiting fugacity: ``e^{beta mu}`` at fixed mu, else ``z_star``."""
        if isinstance(self.mu_mode, FixedMu):
            return math.exp(self.beta * self.mu_mode.mu)
        return self.z_star

    @property
    def scaled(self) -> bool:
        return isinstance(self.mu_mode, Scaled)

    @property
    def rho0(self) -> float:
        """Target condensate density ``h^2/c^2`` of a scaled schedule."""
        if not self.scaled:
            return 0.0
        return (self.h / self.mu_mode.c) ** 2

    def validate(self) -> Phase:
        return classify_phase(self)


def classify_phase(schedule: ThermoSchedule) -> Phase:
    """Normal for a fixed mu below ``mu_star``; critical or condensed for scaled schedules."""
    mode = schedule.mu_mode
    if isinstance(mode, FixedMu):
        if not mode.mu < schedule.mu_star:
            raise InvalidSchedule(f"mu={mode.mu} must lie below mu_star={schedule.mu_star}")
        return Phase.NORMAL
    if not schedule.sigma.attractive and schedule.nu < 3:
        raise InvalidSchedule("critical and condensed schedules with sigma >= 0 need nu >= 3")
    gap = mode.alpha - schedule.alpha_star
    if abs(gap) <= EXPONENT_ATOL:
        return Phase.CONDENSED
    if gap < 0:
        return Phase.CRITICAL
    raise InvalidSchedule(
        f"alpha={mode.alpha} exceeds nu/2 - gamma = {schedule.alpha_star}"
    )


def _ground_gap(schedule: ThermoSchedule, table: SpectrumTable) -> float:
    """``eps_L(0) - mu_L``, computed without cancellation for scaled schedules."""
    mode = schedule.mu_mode
    if isinstance(mode, Scaled):
        return mode.c * table.L ** (-mode.alpha)
    e0 = schedule.nu * (table.deviations[0] + table.boundary.floor)
    return e0 - mode.mu


def _check_table(schedule: ThermoSchedule, table: SpectrumTable) -> None:
    if table.boundary != schedule.sigma:
        raise ValueError("spectrum table and schedule disagree on the boundary")


def chemical_potential(schedule: ThermoSchedule, table: SpectrumTable) -> float:
    """``mu`` for a fixed schedule, ``eps_L(0) - c L^{-alpha}`` for a scaled one."""
    _check_table(schedule, table)
    mode = schedule.mu_mode
    eps0 = schedule.nu * float(table.eigenvalues[0])
    if isinstance(mode, FixedMu):
        if not mode.mu < eps0:
            raise InvalidSchedule(f"mu={mode.mu} not below eps_L(0)={eps0} at L={table.L}")
        return mode.mu
    return eps0 - mode.c * table.L ** (-mode.alpha)


@dataclass(frozen=True)
class GasState:
    """Quasi-free state at one box size.

    ``excess`` is ``beta (eps_L(k) - mu_L)`` on the mode grid (``inf`` where
    excluded) and ``occupation`` the Bose factor ``1/(e^x - 1)`` (0 where
    excluded).
    """

    schedule: ThermoSchedule
    table: SpectrumTable
    mu_L: float
    ground_gap: float
    cutoff: float
    excess: np.ndarray = field(repr=False)
    occupation: np.ndarray = field(repr=False)
    included: np.ndarray = field(repr=False)
    shift: complex
    tail_bound: float

    def __post_init__(self) -> None:
        for arr in (self.excess, self.occupation, self.included):
            arr.setflags(write=False)

    @property
    def L(self) -> float:
        return self.table.L

    @property
    def nu(self) -> int:
        return self.schedule.nu

    @property
    def n_modes(self) -> int:
        return int(np.count_nonzero(self.included))

    @property
    def n0(self) -> float:
        return float(self.occupation[(0,) * self.nu])

    def _index(self, k: Sequence[int]) -> tuple[int, ...]:
        k = tuple(int(x) for x in k)
        if len(k) != self.nu or any(x < 0 for x in k):
            raise ValueError(f"mode {k} is not a valid index in {self.nu} dimensions")
        if any(x >= n for x, n in zip(k, self.occupation.shape)) or not self.included[k]:
            raise ModeOutsideCutoff(f"mode {k} is outside the retained set")
        return k

    def occupation_of(self, k: Sequence[int]) -> float:
        return float(self.occupation[self._index(k)])

    def excess_of(self, k: Sequence[int]) -> float:
        return float(self.excess[self._index(k)])

    def occupations(self) -> dict[tuple[int, ...], float]:
        """Mapping from retained mode index to mean occupation."""
        idx = np.argwhere(self.included)
        vals = self.occupation[self.included]
        return {tuple(int(x) for x in i): float(v) for i, v in zip(idx, vals)}


def _tail_bound(x0: float, beta: float, excess_1d: np.ndarray, L: float, nu: int, cutoff: float) -> float:
    """Certified bound on the total occupation of modes with excess above ``cutoff``.

    For x > cutoff, ``1/(e^x - 1) <= e^{-x}/(1 - e^{-cutoff})`` and
    ``e^{-x} <= e^{-(1-theta) cutoff} e^{-theta x}``.  The full sum of
    ``e^{-theta x_k}`` factorises into one-dimensional sums, bounded by the
    tabulated levels plus a Gaussian integral over the chain lower bound
    ``eps_n - eps_0 >= ((n-1) pi/L)^2``.
    """
    n_tab = len(excess_1d)
    best = math.inf
    for theta in np.linspace(0.05, 0.95, 19):
        a = theta * beta * (math.pi / L) ** 2
        head = float(np.sum(np.exp(-theta * beta * excess_1d)))
        tail = 0.5 * math.sqrt(math.pi / a) * float(erfc(math.sqrt(a) * (n_tab - 1)))
        s = head + tail
        log_b = -(1 - theta) * cutoff - theta * x0 + nu * math.log(s)
        best = min(best, log_b)
    return math.exp(best) / (-math.expm1(-cutoff))


def build_state(
    schedule: ThermoSchedule, table: SpectrumTable, mode_cutoff: float = DEFAULT_CUTOFF
) -> GasState:
    """Populate every mode with ``beta (eps_L(k) - mu_L) <= mode_cutoff``."""
    schedule.validate()
    mu_L = chemical_potential(schedule, table)
    gap0 = _ground_gap(schedule, table)
    if not gap0 > 0:
        raise InvalidSchedule(f"mu_L is not below eps_L(0) at L={table.L}")
    beta, nu = schedule.beta, schedule.nu
    x0 = beta * gap0
    if x0 > mode_cutoff:
        raise InvalidSchedule(f"ground mode excess {x0} exceeds the cutoff {mode_cutoff}")
    e1 = table.excess()
    budget = (mode_cutoff - x0) / beta
    if e1[-1] <= budget:
        raise IndexOutOfRange(
            f"spectrum table with n_max={table.n_max} is too short for cutoff {mode_cutoff}"
        )
    m = int(np.searchsorted(e1, budget, side="right"))
    e = beta * e1[:m]
    grid = np.zeros((m,) * nu)
    for axis in range(nu):
        shape = [1] * nu
        shape[axis] = m
        grid = grid + e.reshape(shape)
    excess = grid + x0
    included = excess <= mode_cutoff
    excess = np.where(included, excess, np.inf)
    with np.errstate(divide="ignore", over="ignore"):
        occupation = np.where(included, 1.0 / np.expm1(excess), 0.0)
    shift = table.L**schedule.gamma * schedule.h * complex(math.cos(schedule.phi), math.sin(schedule.phi)) / gap0
    tail = _tail_bound(x0, beta, e1, table.L, nu, mode_cutoff)
    return GasState(
        schedule=schedule,
        table=table,
        mu_L=mu_L,
        ground_gap=gap0,
        cutoff=float(mode_cutoff),
        excess=excess,
        occupation=occupation,
        included=included,
        shift=shift,
        tail_bound=tail,
    )


def prepare_state(
    schedule: ThermoSchedule, L: float, mode_cutoff: float = DEFAULT_CUTOFF
) -> GasState:
    """Solve a long enough spectrum at size L and build the state on it."""
    schedule.validate()
    boundary = schedule.sigma
    n = max(levels_needed(boundary, L, mode_cutoff / schedule.beta), 4)
    table = solve_1d_spectrum(boundary, L, n)
    return build_state(schedule, table, mode_cutoff)


def condensate_density(state: GasState) -> float:
    """``L^{-nu} (n_L(0) + |shift|^2)``."""
    return (state.n0 + abs(state.shift) ** 2) / state.L**state.nu


def order_parameter(state: GasState) -> complex:
    """``L^{-nu/2}`` times the mean of ``a(0)``, i.e. ``L^{gamma-nu/2} h e^{i phi}/(eps_L(0)-mu_L)``."""
    return state.shift / state.L ** (state.nu / 2)


@dataclass(frozen=True)
class DensityReport:
    L: float
    mu_L: float
    rho0_L: float
    rho_excited_L: float
    rho_total_L: float
    tail_bound: float
    limit_excited: float
    fugacity: float


def excited_density(state: GasState) -> float:
    """``L^{-nu}`` times the occupation summed over retained modes other than 0."""
    total = float(np.sum(state.occupation)) - state.n0
    return total / state.L**state.nu


def total_density(state: GasState) -> DensityReport:
    """Condensate plus excited density, with the orthant-integral limit for comparison."""
    schedule = state.schedule
    rho0 = condensate_density(state)
    rho_ex = excited_density(state)
    z = schedule.fugacity
    lam = thermal_wavelength(schedule.beta)
    limit = jonquiere_integral(schedule.nu, z).value / lam**schedule.nu
    return DensityReport(
        L=state.L,
        mu_L=state.mu_L,
        rho0_L=rho0,
        rho_excited_L=rho_ex,
        rho_total_L=rho0 + rho_ex,
        tail_bound=state.tail_bound / state.L**schedule.nu,
        limit_excited=limit,
        fugacity=z,
    )


def critical_density(schedule: ThermoSchedule) -> float:
    """``lambda^{-nu}`` times the orthant integral at the limiting fugacity ``z_star``."""
    lam = thermal_wavelength(schedule.beta)
    return jonquiere_integral(schedule.nu, schedule.z_star).value / lam**schedule.nu
