"""Finite-volume fluctuations of the free Bose gas with elastic (Robin) walls."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .observables import BareDensity, Field, FluctuationObservable, QPDensity
from .spectrum import BoundaryElasticity, SpectrumTable, solve_1d_spectrum, verify_spacing
from .special import bose_fluctuation_integral, jonquiere_integral, jonquiere_series, thermal_wavelength
from .thermo import FixedMu, GasState, Phase, Scaled, ThermoSchedule, build_state, prepare_state

__all__ = [
    "BareDensity",
    "BoundaryElasticity",
    "Field",
    "FixedMu",
    "FluctuationObservable",
    "GasState",
    "Phase",
    "QPDensity",
    "Scaled",
    "SpectrumTable",
    "ThermoSchedule",
    "bose_fluctuation_integral",
    "build_state",
    "jonquiere_integral",
    "jonquiere_series",
    "prepare_state",
    "solve_1d_spectrum",
    "thermal_wavelength",
    "verify_spacing",
]
