import math

import numpy as np
import pytest

from bosefluct.errors import DivergentSeries
from bosefluct.special import bose_fluctuation_integral, jonquiere_integral, jonquiere_series, thermal_wavelength

ZETA_3_2 = 2.6123753486854883433  # mpmath.zeta(1.5)
# mpmath: (sqrt(pi)/2)^nu * polylog(nu/2, z) and (sqrt(pi)/2)^nu * polylog(nu/2 - 1, z)
MPMATH_J = {
    (1, 0.3): (0.3410001321848573197, 0.44161962713252859259),
    (1, 0.9): (3.5643607616631228078, 22.783535404124910539),
    (2, 0.3): (0.28013184589936823604, 0.33659921288462068633),
    (2, 0.9): (1.8084461031038663775, 7.0685834705770365305),
    (3, 0.3): (0.23547839312011895176, 0.26782087753627404143),
    (3, 0.9): (1.1237154072224670534, 2.7994423958961466377),
}
J_3_AT_1 = 1.8183203490397999517


def test_zeta_three_halves():
    v = jonquiere_series(1.5, 1.0)
    assert abs(v.value - ZETA_3_2) <= v.tail_bound
    assert abs(v.value - 2.612375) < 1e-6


@pytest.mark.parametrize("key", sorted(MPMATH_J))
def test_integral_and_fluctuation_against_polylog(key):
    nu, z = key
    j_ref, f_ref = MPMATH_J[key]
    j = jonquiere_integral(nu, z)
    f = bose_fluctuation_integral(nu, z)
    assert abs(j.value - j_ref) <= max(j.tail_bound, 1e-14 * j_ref) + 4e-16 * j_ref
    assert f.value == pytest.approx(f_ref, rel=1e-10)


def test_integral_at_one_in_three_dimensions():
    v = jonquiere_integral(3, 1.0)
    assert abs(v.value - J_3_AT_1) <= v.tail_bound


def test_integral_series_ratio():
    for nu in (1, 2, 3):
        for z in (0.3, 0.5, 0.9):
            r = jonquiere_integral(nu, z).value / jonquiere_series(nu / 2, z).value
            assert r == pytest.approx((math.sqrt(math.pi) / 2) ** nu, rel=1e-12)


def test_divergence():
    with pytest.raises(DivergentSeries):
        jonquiere_series(0.5, 1.0)
    with pytest.raises(DivergentSeries):
        jonquiere_integral(2, 1.0)
    with pytest.raises(DivergentSeries):
        bose_fluctuation_integral(4, 1.0)


def test_small_z_leading_term():
    z = 1e-9
    assert jonquiere_series(2.5, z).value == pytest.approx(z, rel=1e-8)
    assert jonquiere_integral(3, z).value == pytest.approx(z * (math.sqrt(math.pi) / 2) ** 3, rel=1e-8)


def test_monotone_and_derivative():
    zs = np.linspace(0.05, 0.95, 19)
    vals = [jonquiere_series(1.5, z).value for z in zs]
    assert np.all(np.diff(vals) > 0)
    # z d/dz Li_s(z) = Li_{s-1}(z)
    z, h = 0.6, 1e-5
    fd = (jonquiere_series(1.5, z + h).value - jonquiere_series(1.5, z - h).value) / (2 * h)
    assert z * fd == pytest.approx(jonquiere_series(0.5, z).value, rel=1e-8)


def test_thermal_wavelength():
    assert thermal_wavelength(4.0) == pytest.approx(2 * math.pi)
    with pytest.raises(ValueError):
        thermal_wavelength(0.0)
