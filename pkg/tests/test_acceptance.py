"""Acceptance criteria, one test each, at their stated tolerances."""

import math
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np

from bosefluct.charfun import charfun, charfun_qp_density_k0, fock_oracle, quadratic_linear_charfun, select_mode_series
from bosefluct.cumulants import ToyState, fluctuation_cumulants, oracle_cumulants
from bosefluct.errors import InvalidSchedule, NotCovered
from bosefluct.limits import (
    convergence_study,
    exponent_extraction,
    limit_law,
    region_classify,
    region_delta_exact,
    scaled_schedule,
)
from bosefluct.observables import Field, FluctuationObservable, QPDensity
from bosefluct.special import bose_fluctuation_integral, jonquiere_integral, jonquiere_series, thermal_wavelength
from bosefluct.spectrum import BoundaryElasticity, gap_asymptotics, solve_1d_spectrum, verify_spacing
from bosefluct.thermo import FixedMu, ThermoSchedule, condensate_density, order_parameter, prepare_state, total_density

T = np.linspace(-8, 8, 161)
SWEEP = [100.0, 400.0, 1600.0]


def decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def fmt(xs) -> str:
    return "[" + ", ".join(f"{x:.3g}" for x in xs) + "]"


def test_c01_spectrum_closed_forms(verdict):
    worst = 0.0
    for L in (1.0, math.pi, 10.0):
        for b, shift in ((BoundaryElasticity.neumann(), 0), (BoundaryElasticity.dirichlet(), 1)):
            exact = ((np.arange(51) + shift) * math.pi / L) ** 2
            for method in ("auto", "roots"):
                ev = solve_1d_spectrum(b, L, 50, method=method).eigenvalues
                rel = np.abs(ev - exact) / np.where(exact > 0, exact, 1.0)
                worst = max(worst, float(np.max(rel)))
    verdict("C1 spectrum closed forms", worst <= 1e-10, f"max relative error {worst:.2e}")


def test_c02_spacing_suite(verdict):
    boundaries = [BoundaryElasticity(s) for s in (-2.0, -1.0, -0.5, 0.5, 1.0)] + [BoundaryElasticity.dirichlet()]
    failures, cells = [], 0
    for b in boundaries:
        for L in (3.0, 5.0, 10.0, 20.0):
            if b.attractive and L * abs(b.sigma) <= 2:
                continue
            cells += 1
            rep = verify_spacing(solve_1d_spectrum(b, L, 49))
            failures += [(b.label(), L, f) for f in rep.failures()]
    verdict("C2 spacing suite", not failures, f"{cells} cells, {len(failures)} violations")


def test_c03_gap_asymptotics(verdict):
    devs = [abs(d0) for d0, _ in gap_asymptotics(-1.0, [5.0, 10.0, 15.0, 20.0])]
    ratios = [devs[i + 1] / devs[i] for i in range(1, 3)]
    bound = 2 * math.exp(-5)
    verdict("C3 gap asymptotics", all(r <= bound for r in ratios), f"ratios {fmt(ratios)} vs {bound:.4g}")


def test_c04_jonquiere(verdict):
    z32 = jonquiere_series(1.5, 1.0).value
    ok = abs(z32 - 2.612375) <= 1e-5
    worst = 0.0
    cases = [(nu, z) for nu in (1, 2, 3) for z in (0.3, 0.9)] + [(3, 1.0)]
    for nu, z in cases:
        ratio = jonquiere_integral(nu, z).value / jonquiere_series(nu / 2, z).value
        worst = max(worst, abs(ratio - (math.sqrt(math.pi) / 2) ** nu))
    ok = ok and worst <= 1e-6
    verdict("C4 Jonquiere", ok, f"zeta(3/2)={z32:.10f}, ratio error {worst:.2e}")


def test_c05_excited_density_desk_scale(verdict):
    s = ThermoSchedule(1.0, 3, 1.0, FixedMu(-1.0))
    lam = thermal_wavelength(1.0)
    limit = jonquiere_integral(3, math.exp(-1.0)).value / lam**3
    dev = []
    for L in (10.0, 20.0, 40.0):
        rep = total_density(prepare_state(s, L))
        dev.append(abs(rep.rho_excited_L - limit) / limit)
    ok = decreasing(dev) and dev[-1] < 0.02
    verdict("C5 excited density at desk scale", ok, f"relative deviations {fmt(dev)}")


def test_c06_condensate_desk_scale(verdict):
    s = ThermoSchedule.condensed(1.0, 1, -1.0, h=1.0, rho0=1.0, gamma=0.0)
    Ls = [50.0, 100.0, 200.0, 400.0, 800.0]
    states = [prepare_state(s, L) for L in Ls]
    err = [abs(condensate_density(st) - 1.0) for st in states]
    at400 = err[Ls.index(400.0)]
    exponent = -np.polyfit(np.log(Ls), np.log(err), 1)[0]
    op = abs(order_parameter(states[Ls.index(400.0)]))
    ok = at400 < 0.05 and exponent >= 0.2 and abs(op - 1) < 0.05
    verdict("C6 condensate at desk scale", ok, f"|rho0-1|={at400:.3g} at L=400, exponent {exponent:.3f}, |order|={op:.4f}")


def test_c07_wick_cumulant_oracle(verdict):
    occ = [Fraction(3, 2), Fraction(1), Fraction(2, 3), Fraction(2, 5), Fraction(1, 4), Fraction(1, 9)]
    state = ToyState(occ)
    worst_rel, worst_odd = 0.0, 0.0
    for k in (0, 1):
        obs = FluctuationObservable(QPDensity((k,)))
        diag = fluctuation_cumulants(8, obs, state)
        oracle = oracle_cumulants(8, obs, state)
        for a, b in zip(diag, oracle):
            if b != 0:
                worst_rel = max(worst_rel, abs(float((a - b) / b)))
            else:
                worst_rel = max(worst_rel, abs(float(a)))
        if k:
            worst_odd = max(worst_odd, max(abs(float(x)) for x in diag[::2]))
    ok = worst_rel <= 1e-12 and worst_odd <= 1e-12
    verdict("C7 Wick/cumulant oracle", ok, f"max relative gap {worst_rel:.2e}, max odd {worst_odd:.2e}")


def test_c08_fock_oracle(verdict):
    q = 0.5
    n = q / (1 - q)
    oracle = fock_oracle([n], [[1.0]], None, 60, T)
    product = charfun_qp_density_k0(FluctuationObservable(QPDensity((0,))), ToyState([n]), T)
    da = float(np.max(np.abs(product.values * np.exp(1j * T * n) - oracle.values)))
    occ = [0.5, 0.4]
    M = np.array([[0.0, 0.5], [0.5, 0.0]])
    w = np.array([0.3 * np.exp(0.4j), 0.0])
    db = float(np.max(np.abs(quadratic_linear_charfun(occ, M, w, T) - fock_oracle(occ, M, w, 40, T).values)))
    verdict("C8 Fock oracle", da <= 1e-8 and db <= 1e-6, f"(a) {da:.2e}, (b) {db:.2e}")


def test_c09_field_limits(verdict):
    normal = ThermoSchedule(1.0, 1, -1.0, FixedMu(-2.0))
    st = prepare_state(normal, 100.0)
    k = select_mode_series(-1.0, st.table, 1)
    smp = charfun(FluctuationObservable(Field(k)), st, T)
    E = float(st.table.eigenvalues[k[0]])
    ref = np.exp(-(T**2) / (4 * math.tanh(0.5 * (-1.0 + 2.0))))
    da = smp.sup_distance(ref)
    crit = scaled_schedule(1.0, 1, -1.0, c=1.0, alpha=0.3, gamma=0.0)
    law = lambda t: np.exp(-(t**2) / 2.0).astype(complex)  # exp(-t^2/(2 beta c))
    rep = convergence_study(FluctuationObservable(Field((0,))), crit, SWEEP, T, E_target=-1.0, law=law, delta=0.15)
    ok = da < 1e-3 and decreasing(rep.distances) and rep.final < 0.05
    verdict("C9 field limits", ok, f"(a) {da:.2e} at E_L={E:.6f}, (b) {fmt(rep.distances)}")


def test_c10_k0_gamma_power(verdict):
    s = scaled_schedule(1.0, 1, -1.0, c=1.0, alpha=1.0, gamma=-0.6)
    law = lambda t: ((np.exp(-1j * t) / (1 - 1j * t)) ** 2)
    rep = convergence_study(FluctuationObservable(QPDensity((0,))), s, SWEEP, T, law=law, delta=0.5)
    ok = decreasing(rep.distances) and rep.final < 0.05
    verdict("C10 k=0 quasi-particle GammaPower law", ok, f"distances {fmt(rep.distances)}")


def test_c11_k_gaussian(verdict):
    s = ThermoSchedule(1.0, 1, -1.0, FixedMu(-2.0))
    zeta = bose_fluctuation_integral(1, math.exp(-2.0)).value / thermal_wavelength(1.0)
    smp = charfun(FluctuationObservable(QPDensity((2,))), prepare_state(s, 200.0), T)
    d = smp.sup_distance(np.exp(-(T**2) * zeta / 4))
    verdict("C11 k!=0 quasi-particle Gaussian law", d < 0.05, f"distance {d:.3g} at L=200")


def _conjunctions(a: Fraction, g: Fraction, nu: int):
    half = Fraction(nu, 2)
    return {
        1: (a < half and 3 * a < nu - 2 * g, Fraction(0)),
        2: (a == half and a + 2 * g < 0, Fraction(0)),
        3: (a > half and a + 2 * g < 0, a - half),
        4: (3 * a > nu - 2 * g and a + 2 * g > 0, g + Fraction(3, 2) * a - half),
    }


def test_c12_region_map(verdict):
    nu = 3
    step = Fraction(1, 20)
    bad, checked = [], 0
    for i in range(1, 61):
        for j in range(-29, 30):
            a, g = i * step, j * step
            if not (-Fraction(3, 2) < g < Fraction(3, 2) and a <= Fraction(3, 2) - g):
                continue
            checked += 1
            hits = [(r, d) for r, (ok, d) in _conjunctions(a, g, nu).items() if ok]
            try:
                lab = region_classify(a, g, nu)
                delta = region_delta_exact(a, g, nu)
                if len(hits) != 1 or lab.region != hits[0][0] or delta != hits[0][1]:
                    bad.append((a, g))
            except NotCovered:
                if len(hits) == 1:
                    bad.append((a, g))
            except InvalidSchedule:
                bad.append((a, g))
    verdict("C12 region map", not bad and checked > 0, f"{checked} admissible grid points, {len(bad)} mismatches")


def test_c13_exponent_extraction(verdict):
    qp = exponent_extraction(
        FluctuationObservable(QPDensity((0,))), scaled_schedule(1.0, 1, -1.0, c=1.0, alpha=1.0, gamma=-0.6), SWEEP
    )
    field = exponent_extraction(
        FluctuationObservable(Field((0,))), scaled_schedule(1.0, 1, -1.0, c=1.0, alpha=0.3), SWEEP, E_target=-1.0
    )
    ok = abs(qp.delta - 0.5) <= 0.025 and abs(field.delta - 0.15) <= 0.01
    verdict("C13 exponent extraction", ok, f"qp delta {qp.delta:.5f}, field delta {field.delta:.5f}")


def _cli(args, threads):
    env = dict(os.environ, BOSEFLUCT_THREADS=str(threads))
    proc = subprocess.run([sys.executable, "-m", "bosefluct.cli", *args], capture_output=True, env=env, check=True)
    return proc.stdout


def test_c14_determinism(verdict):
    runs = {
        "density": ["density", "--nu", "3", "--sigma", "1", "--beta", "1", "--mu", "-1", "--L", "10,20,40"],
        "charfun": ["charfun", "--observable", "qp-density", "--k", "0", "--nu", "1", "--sigma", "-1",
                    "--c", "1", "--alpha", "1", "--gamma", "-0.6", "--delta", "0.5", "--L", "100,400,1600"],
        "converge": ["converge", "--observable", "qp-density", "--k", "0", "--nu", "1", "--sigma", "-1",
                     "--c", "1", "--alpha", "1", "--gamma", "-0.6", "--delta", "auto", "--L", "100,400,1600"],
    }
    same = {}
    for name, args in runs.items():
        outputs = [_cli(args, th) for th in (1, 4, 1, 4)]
        same[name] = all(o == outputs[0] for o in outputs) and len(outputs[0]) > 0
    verdict("C14 determinism", all(same.values()), ", ".join(f"{k} {'identical' if v else 'differs'}" for k, v in same.items()))
