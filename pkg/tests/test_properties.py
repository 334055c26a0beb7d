import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from bosefluct.charfun import charfun, quadratic_linear_charfun
from bosefluct.cumulants import ToyState, fluctuation_cumulants, oracle_cumulants
from bosefluct.errors import InvalidSchedule, NotCovered
from bosefluct.limits import limit_law, region_classify, region_delta_exact
from bosefluct.observables import BareDensity, FluctuationObservable, QPDensity
from bosefluct.special import jonquiere_integral, jonquiere_series
from bosefluct.spectrum import BoundaryElasticity, solve_1d_spectrum, spectrum_nd, verify_spacing
from bosefluct.thermo import FixedMu, Scaled, ThermoSchedule, condensate_density, order_parameter, prepare_state

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
SLOW = settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])

sigmas = st.floats(-3.0, 3.0).filter(lambda s: abs(s) > 1e-3)
lengths = st.floats(1.0, 25.0)


@SETTINGS
@given(sigmas, lengths)
def test_negative_levels_and_spacing(sigma, L):
    assume(sigma > 0 or L * abs(sigma) > 2.05)
    tab = solve_1d_spectrum(sigma, L, 30)
    assert int(np.sum(tab.eigenvalues < 0)) == (2 if sigma < 0 else 0)
    assert verify_spacing(tab).passed


@SETTINGS
@given(sigmas, lengths, st.lists(st.integers(0, 6), min_size=2, max_size=3))
def test_nd_energy_permutation_symmetry(sigma, L, k):
    assume(sigma > 0 or L * abs(sigma) > 2.05)
    tab = solve_1d_spectrum(sigma, L, 8)
    ref = spectrum_nd(tab, tuple(k))
    assert spectrum_nd(tab, tuple(reversed(k))) == pytest.approx(ref, rel=1e-14, abs=1e-14)


@SETTINGS
@given(st.floats(0.5, 20.0), st.booleans())
def test_root_finder_matches_closed_forms(L, dirichlet):
    b = BoundaryElasticity.dirichlet() if dirichlet else BoundaryElasticity.neumann()
    n = np.arange(21) + (1 if dirichlet else 0)
    roots = solve_1d_spectrum(b, L, 20, method="roots").eigenvalues
    np.testing.assert_allclose(roots, (n * math.pi / L) ** 2, rtol=1e-10, atol=1e-12)


@SETTINGS
@given(st.sampled_from([1, 2, 3]), st.floats(0.01, 0.97))
def test_integral_series_ratio_and_monotonicity(nu, z):
    a = jonquiere_integral(nu, z)
    b = jonquiere_series(nu / 2, z)
    factor = (math.sqrt(math.pi) / 2) ** nu
    assert abs(a.value - factor * b.value) <= a.tail_bound + factor * b.tail_bound + 1e-14 * a.value
    assert jonquiere_integral(nu, min(z * 1.02, 0.99)).value > a.value


@SLOW
@given(st.floats(-3.0, -1.05), st.floats(0.3, 2.0), st.floats(5.0, 60.0))
def test_tail_bound_brackets_cutoff_error(mu, beta, L):
    s = ThermoSchedule(beta, 1, 1.0, FixedMu(mu))
    coarse = prepare_state(s, L, mode_cutoff=10.0)
    fine = prepare_state(s, L, mode_cutoff=20.0)
    gap = (np.sum(fine.occupation) - np.sum(coarse.occupation)) / L
    assert -1e-15 <= gap <= coarse.tail_bound / L + 1e-15


@SLOW
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(-0.3, 0.3), st.floats(20.0, 400.0), st.floats(0, 6.28))
def test_order_parameter_schwarz(h, rho0, gamma, L, phi):
    s = ThermoSchedule.condensed(1.0, 1, -1.0, h=h, rho0=rho0, gamma=gamma, phi=phi)
    state = prepare_state(s, L)
    assert abs(order_parameter(state)) ** 2 <= condensate_density(state) * (1 + 1e-14)


def _small_states():
    occ = st.fractions(min_value=Fraction(1, 20), max_value=Fraction(3), max_denominator=20)
    return st.lists(occ, min_size=3, max_size=5)


@SLOW
@given(_small_states(), st.integers(0, 2))
def test_diagrams_equal_oracle_on_random_exact_states(occ, k):
    state = ToyState(occ)
    obs = FluctuationObservable(QPDensity((k,)))
    diag = fluctuation_cumulants(5, obs, state)
    assert diag == oracle_cumulants(5, obs, state)
    if k:
        assert diag[0] == diag[2] == diag[4] == 0


@SLOW
@given(st.floats(-3.0, -1.1), st.floats(10.0, 80.0), st.integers(0, 3), st.sampled_from(["qp", "bare"]))
def test_charfun_normalised_bounded_hermitian(mu, L, k, kind):
    s = ThermoSchedule(1.0, 1, -1.0, FixedMu(mu))
    state = prepare_state(s, L)
    obs = FluctuationObservable(QPDensity((k,)) if kind == "qp" else BareDensity((k,)))
    smp = charfun(obs, state)
    assert smp.values[smp.t_grid == 0][0] == 1
    assert np.all(np.abs(smp.values) <= 1 + 1e-12 + smp.error_estimate)
    assert smp.hermitian_defect() <= 1e-12


@SETTINGS
@given(st.lists(st.floats(0.01, 2.0), min_size=1, max_size=4), st.floats(-2, 2))
def test_quadratic_identity_second_derivative(occ, w_re):
    n = np.array(occ)
    size = len(n)
    rng = np.random.default_rng(size)
    A = rng.normal(size=(size, size))
    M = 0.5 * (A + A.T)
    w = np.full(size, w_re, complex)
    mean = np.sum(np.diag(M) * n)

    def second_difference(h):
        t = np.array([-h, 0.0, h])
        centred = quadratic_linear_charfun(n, M, w, t) * np.exp(-1j * mean * t)
        return -(centred[0] + centred[2] - 2 * centred[1]).real / h**2

    # Var = tr(M N M (N+1)) + w^dagger (2N+1) w for b^dagger M b + b^dagger w + h.c.
    N = np.diag(n)
    var = np.trace(M @ N @ M @ (N + np.eye(size))) + np.real(np.conj(w) @ ((2 * N + np.eye(size)) @ w))
    # Richardson step removes the h^2 term of the central difference.
    fd = (4 * second_difference(1e-3) - second_difference(2e-3)) / 3
    assert fd == pytest.approx(var, rel=1e-6, abs=1e-9)


@SETTINGS
@given(st.floats(-3.0, -0.05), st.floats(0.3, 3.0))
def test_qp_gaussian_variance_halved_off_zero(mu, beta):
    s = ThermoSchedule(beta, 1, -1.0, FixedMu(mu - 1.0))
    _, law0 = limit_law(FluctuationObservable(QPDensity((0,))), s)
    _, law2 = limit_law(FluctuationObservable(QPDensity((2,))), s)
    assert law2.variance == law0.variance / 2


RATIONALS = st.fractions(min_value=-2, max_value=2, max_denominator=40)


@settings(max_examples=300, deadline=None)
@given(RATIONALS, RATIONALS, st.sampled_from([1, 2, 3]))
def test_region_predicates(a, g, nu):
    half = Fraction(nu, 2)
    try:
        label = region_classify(a, g, nu)
    except InvalidSchedule:
        assert not (-half < g < half and 0 < a <= half - g)
        return
    except NotCovered:
        conds = [a < half and 3 * a < nu - 2 * g, a == half and a + 2 * g < 0,
                 a > half and a + 2 * g < 0, 3 * a > nu - 2 * g and a + 2 * g > 0]
        assert sum(conds) != 1
        return
    delta = region_delta_exact(a, g, nu)
    if label.region == 1:
        assert a < half and 3 * a < nu - 2 * g and delta == 0
    elif label.region == 2:
        assert a == half and a + 2 * g < 0 and delta == 0
    elif label.region == 3:
        assert a > half and a + 2 * g < 0 and delta == a - half
    else:
        assert 3 * a > nu - 2 * g and a + 2 * g > 0 and delta == g + Fraction(3, 2) * a - half


def test_diverging_ground_occupation_exponent():
    # n_L(0) = L^alpha/(beta c) - 1/2 + ..., so the sweep starts where the offset is small.
    alpha, c = 0.45, 0.5
    s = ThermoSchedule(1.0, 1, -1.0, Scaled(c, alpha))
    Ls = [400.0, 1600.0, 6400.0, 25600.0]
    n0 = [prepare_state(s, L).n0 for L in Ls]
    slope = np.polyfit(np.log(Ls), np.log(n0), 1)[0]
    assert slope == pytest.approx(alpha, rel=0.02)
    assert n0[-1] * c / Ls[-1] ** alpha == pytest.approx(1.0, rel=0.05)


def test_critical_condensate_vanishes():
    s = ThermoSchedule(1.0, 1, -1.0, Scaled(1.0, 0.3))
    rho = [condensate_density(prepare_state(s, L)) for L in (100.0, 400.0, 1600.0)]
    assert rho[0] > rho[1] > rho[2]
    assert rho[2] < 0.01
