import math

import numpy as np
import pytest

from bosefluct.errors import AssumptionViolated, IndexOutOfRange
from bosefluct.spectrum import (
    BoundaryElasticity,
    excess_nd,
    gap_asymptotics,
    levels_needed,
    solve_1d_spectrum,
    spectrum_nd,
    verify_spacing,
)

# 40-digit mpmath roots of the even/odd characteristic equations, frozen.
MPMATH_LEVELS = {
    (-1.0, 10.0): [-1.000181451503979327, -0.99981825168932774415, 0.15071598364718663936, 0.57463142707637912209],
    (-2.0, 5.0): [-4.0007258060159173079, -3.9992730067573109766, 0.60286393458874655742],
    (1.0, 5.0): [0.2087491500457572388, 0.90679490598494237971, 2.2282584800369691423, 4.2655557962932914947],
    (0.5, 3.0): [0.26444236836747155331, 1.6722644941775209882, 5.0209903806349684571],
}
MPMATH_DEVIATIONS = {
    5.0: (-0.025613174775725246229, 0.028545583663909663229),
    10.0: (-0.00018145150397932697403, 0.00018174831067225584938),
    15.0: (-1.2235988016073202885e-6, 1.2236197626827748068e-6),
    20.0: (-8.2446138440044616699e-9, 8.2446151355041552786e-9),
}


def test_neumann_closed_form_small():
    tab = solve_1d_spectrum(0.0, math.pi, 3)
    assert np.allclose(tab.eigenvalues, [0, 1, 4, 9], atol=1e-14)


def test_dirichlet_closed_form_small():
    tab = solve_1d_spectrum(BoundaryElasticity.dirichlet(), math.pi, 2)
    assert np.allclose(tab.eigenvalues, [1, 4, 9], atol=1e-14)


@pytest.mark.parametrize("boundary", [BoundaryElasticity.neumann(), BoundaryElasticity.dirichlet()])
@pytest.mark.parametrize("L", [1.0, math.pi, 10.0])
def test_root_finder_reproduces_closed_forms(boundary, L):
    closed = solve_1d_spectrum(boundary, L, 40)
    roots = solve_1d_spectrum(boundary, L, 40, method="roots")
    width = np.maximum(1e-12, 8 * np.spacing(closed.eigenvalues))
    assert np.all(np.abs(closed.eigenvalues - roots.eigenvalues) <= width)


@pytest.mark.parametrize("key", sorted(MPMATH_LEVELS))
def test_robin_levels_against_high_precision(key):
    sigma, L = key
    ref = MPMATH_LEVELS[key]
    tab = solve_1d_spectrum(sigma, L, len(ref) + 2)
    assert np.allclose(tab.eigenvalues[: len(ref)], ref, rtol=0, atol=2e-12)


@pytest.mark.parametrize("L", sorted(MPMATH_DEVIATIONS))
def test_attractive_deviations_relative_accuracy(L):
    tab = solve_1d_spectrum(-1.0, L, 4)
    d0, d1 = MPMATH_DEVIATIONS[L]
    assert tab.deviations[0] == pytest.approx(d0, rel=1e-9)
    assert tab.deviations[1] == pytest.approx(d1, rel=1e-9)


def test_example_sigma_minus_one_L10_window():
    tab = solve_1d_spectrum(-1.0, 10.0, 5)
    assert -1 - 1e-3 < tab.eigenvalues[0] < -1
    assert -1 < tab.eigenvalues[1] < -1 + 1e-3


def test_sigma_minus_two_L5_signs_and_size():
    dev = gap_asymptotics(-2.0, [5.0])[0]
    assert dev[0] < 0 < dev[1]
    assert max(abs(dev[0]), abs(dev[1])) < 1e-3


def test_gap_ratio_close_to_exp_minus_five():
    devs = gap_asymptotics(-1.0, [5.0, 10.0, 15.0])
    r = [abs(devs[i + 1][0]) / abs(devs[i][0]) for i in range(2)]
    for x in r:
        assert 0.5 * math.exp(-5) < x < 2 * math.exp(-5)


@pytest.mark.parametrize("sigma,L", [(-1.0, 10.0), (1.0, 5.0)])
def test_spacing_examples(sigma, L):
    assert verify_spacing(solve_1d_spectrum(sigma, L, 20)).passed


def test_neumann_spacing_is_exact_boundary_case():
    rep = verify_spacing(solve_1d_spectrum(0.0, math.pi, 10))
    assert rep.exact_boundary_case and rep.passed


@pytest.mark.parametrize("sigma", [-2.0, -0.7, 0.0, 0.3, 4.0])
def test_negative_level_count(sigma):
    tab = solve_1d_spectrum(sigma, 6.0, 12)
    expected = 2 if sigma < 0 else 0
    assert int(np.sum(tab.eigenvalues < 0)) == expected


def test_parity_and_brackets():
    tab = solve_1d_spectrum(0.8, 4.0, 15)
    assert tab.parity[:4] == ("even", "odd", "even", "odd")
    lo, hi = tab.brackets[:, 0], tab.brackets[:, 1]
    assert np.all(lo <= tab.eigenvalues) and np.all(tab.eigenvalues <= hi)
    assert np.all(hi - lo <= np.maximum(tab.tol, 8 * np.spacing(np.abs(tab.eigenvalues))))
    assert np.all(np.diff(tab.eigenvalues) > 0)


def test_attractive_assumption():
    with pytest.raises(AssumptionViolated):
        solve_1d_spectrum(-0.1, 10.0, 5)


def test_nd_energies():
    tab = solve_1d_spectrum(0.0, math.pi, 4)
    assert spectrum_nd(tab, (1, 2)) == pytest.approx(5.0)
    assert spectrum_nd(tab, (0,)) == tab.eigenvalues[0]
    big = solve_1d_spectrum(-1.0, 30.0, 4)
    assert spectrum_nd(big, (0, 0, 0)) == pytest.approx(-3.0, abs=1e-10)
    assert excess_nd(big, (1, 0, 2)) == pytest.approx(excess_nd(big, (2, 1, 0)), abs=1e-15)
    with pytest.raises(IndexOutOfRange):
        spectrum_nd(tab, (9,))


def test_levels_needed_covers_budget():
    for sigma, L in [(-1.0, 7.0), (0.5, 3.0), (0.0, 2.0)]:
        b = BoundaryElasticity(sigma)
        n = levels_needed(b, L, 30.0)
        tab = solve_1d_spectrum(b, L, n)
        assert tab.excess()[-1] > 30.0
