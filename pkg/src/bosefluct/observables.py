"""Fluctuation observables: field, quasi-particle density and bare density."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union


def _as_mode(k: Sequence[int] | int) -> tuple[int, ...]:
    if isinstance(k, int):
        k = (k,)
    mode = tuple(int(x) for x in k)
    if not mode or any(x < 0 for x in mode):
        raise ValueError(f"mode index must be a non-empty vector of non-negative integers, got {k}")
    return mode


@dataclass(frozen=True)
class Field:
    """``A^+_k = (b(k) + b(k)^dagger)/sqrt(2)`` for ``sign=+1``; the ``i(b^dagger - b)`` form for -1."""

    k: tuple[int, ...]
    sign: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "k", _as_mode(self.k))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


@dataclass(frozen=True)
class QPDensity:
    """Quasi-particle density fluctuation ``N'_k`` built from the Bogoliubov-shifted modes."""

    k: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "k", _as_mode(self.k))


@dataclass(frozen=True)
class BareDensity:
    """Density fluctuation ``N_k`` of the original particles (includes the condensate shift)."""

    k: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "k", _as_mode(self.k))


Kind = Union[Field, QPDensity, BareDensity]


@dataclass(frozen=True)
class FluctuationObservable:
    kind: Kind
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.kind, (Field, QPDensity, BareDensity)):
            raise TypeError(f"unknown observable kind {self.kind!r}")
        if self.delta != self.delta or abs(self.delta) == float("inf"):
            raise ValueError("delta must be finite")

    @property
    def k(self) -> tuple[int, ...]:
        return self.kind.k

    @property
    def zero_mode(self) -> bool:
        return not any(self.k)

    @property
    def low_mode(self) -> bool:
        """``k in {0,1}^nu`` and ``k != 0``."""
        return not self.zero_mode and all(x <= 1 for x in self.k)

    def with_delta(self, delta: float) -> "FluctuationObservable":
        return FluctuationObservable(self.kind, float(delta))

    def label(self) -> str:
        name = {Field: "field", QPDensity: "qp-density", BareDensity: "bare-density"}[type(self.kind)]
        k = ",".join(str(x) for x in self.k)
        if isinstance(self.kind, Field):
            return f"{name}[sign={'+' if self.kind.sign > 0 else '-'},k=({k})]"
        return f"{name}[k=({k})]"


def sigma_multiplicity(k: Sequence[int]) -> int:
    """``2^{nu - |k|^2}`` for ``k in {0,1}^nu``: the number of low mode pairs ``(p, p+k)``."""
    k = _as_mode(k)
    if any(x > 1 for x in k):
        raise ValueError("multiplicity is defined for k in {0,1}^nu only")
    return 2 ** (len(k) - sum(x * x for x in k))
