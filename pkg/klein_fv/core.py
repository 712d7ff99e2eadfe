"""Shared value types: the unit system, the 1D grid and complex amplitudes."""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import NumericalError, PreconditionError

# A single complex amplitude. Sequences of them are complex128 numpy arrays.
ComplexAmplitude = complex


@dataclass(frozen=True)
class Units:
    """Physical constants hbar, c and m. Every formula in the package is written in terms of them."""

    hbar: float = 1.0
    c: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "c", "m"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise PreconditionError(f"Unit constant '{name}' must be finite and > 0, got {value!r}.")

    @property
    def rest_energy(self) -> float:
        """mc^2"""
        return self.m * self.c ** 2

    @property
    def compton_momentum(self) -> float:
        """mc"""
        return self.m * self.c


def natural_units() -> Units:
    """Returns the natural unit system hbar = c = m = 1."""
    return Units(hbar=1.0, c=1.0, m=1.0)


def rest_energy(units: Units) -> float:
    return units.rest_energy


def compton_momentum(units: Units) -> float:
    return units.compton_momentum


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [x_min, x_max] with n_points nodes, both ends included."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise PreconditionError("Grid bounds must be finite.")
        if not self.x_min < self.x_max:
            raise PreconditionError(f"Grid requires x_min < x_max, got [{self.x_min}, {self.x_max}].")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise PreconditionError(f"Grid needs an integer n_points >= 2, got {self.n_points!r}.")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def points(self) -> np.ndarray:
        """x_k = x_min + k*dx; the last node is pinned to x_max exactly."""
        x = self.x_min + np.arange(self.n_points) * self.dx
        # no accumulated rounding at the right edge
        x[-1] = self.x_max
        return x

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        """True when the nodes are mirror images of each other about x = 0."""
        return abs(self.x_min + self.x_max) <= rtol * max(abs(self.x_min), abs(self.x_max))

    def same_as(self, other: "Grid1D") -> bool:
        return self == other

    def refined(self, factor: int = 2) -> "Grid1D":
        """Same interval with dx divided by factor."""
        return Grid1D(self.x_min, self.x_max, (self.n_points - 1) * factor + 1)


def check_finite(values: Union[np.ndarray, complex, float], name: str) -> None:
    """Raises NumericalError if values hold NaN or Inf."""
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"Non-finite values found in '{name}'.")


def principal_sqrt(value: float) -> complex:
    """Square root of a real number on the branch Im >= 0."""
    if value >= 0.0:
        return complex(math.sqrt(value), 0.0)
    return complex(0.0, math.sqrt(-value))


def momentum_from_energy(E: float, V: float, units: Units) -> complex:
    """
    Principal root of (E - V)^2/c^2 - m^2 c^2.

    Purely real when (E - V)^2 >= m^2 c^4, purely imaginary with positive
    imaginary part otherwise. Picking the physical sign is left to the caller.
    """
    c = units.c
    mc = units.compton_momentum
    # negative radicand inside the gap |E - V| < mc^2
    return principal_sqrt((E - V) ** 2 / c ** 2 - mc ** 2)


def energy_from_momentum(p: Union[float, np.ndarray], units: Units) -> Union[float, np.ndarray]:
    """Positive branch E(p) = sqrt(p^2 c^2 + m^2 c^4)."""
    return np.sqrt((p * units.c) ** 2 + units.rest_energy ** 2)


def group_velocity(p: Union[float, np.ndarray], units: Units) -> Union[float, np.ndarray]:
    """dE/dp = p c^2 / E(p); always below c in magnitude."""
    return p * units.c ** 2 / energy_from_momentum(p, units)
