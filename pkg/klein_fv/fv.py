"""
Feshbach-Villars split of a Klein-Gordon wavefunction and its density diagnostics.

A KG state (psi, psi_dot) on a grid maps to the pair (phi, chi) with

    phi = 1/2 [(1 - V/mc^2) psi + (i hbar/mc^2) psi_dot]
    chi = 1/2 [(1 + V/mc^2) psi - (i hbar/mc^2) psi_dot]

so that phi + chi = psi and the conserved charge density is |phi|^2 - |chi|^2.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from .core import Grid1D, Units, check_finite
from .errors import GridMismatchError, PreconditionError

logger = logging.getLogger(__name__)

PotentialSamples = Union[float, np.ndarray]


def _as_samples(values, grid: Grid1D, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=complex)
    if array.shape != (grid.n_points,):
        raise GridMismatchError(
            f"'{name}' has shape {array.shape}, expected ({grid.n_points},) for the grid.")
    check_finite(array, name)
    return array


@dataclass(frozen=True)
class KGState:
    """Wavefunction psi and its time derivative psi_dot sampled on a grid."""

    psi: np.ndarray
    psi_dot: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        object.__setattr__(self, "psi", _as_samples(self.psi, self.grid, "psi"))
        object.__setattr__(self, "psi_dot", _as_samples(self.psi_dot, self.grid, "psi_dot"))


@dataclass(frozen=True)
class FVField:
    """The (phi, chi) pair on a grid."""

    phi: np.ndarray
    chi: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        object.__setattr__(self, "phi", _as_samples(self.phi, self.grid, "phi"))
        object.__setattr__(self, "chi", _as_samples(self.chi, self.grid, "chi"))

    @property
    def psi(self) -> np.ndarray:
        return self.phi + self.chi

    @property
    def master(self) -> str:
        """'phi' for particle-like fields, 'chi' when chi dominates (antiparticle-like)."""
        phi_norm = trapezoid(np.abs(self.phi) ** 2, dx=self.grid.dx)
        chi_norm = trapezoid(np.abs(self.chi) ** 2, dx=self.grid.dx)
        return "phi" if phi_norm >= chi_norm else "chi"

    @classmethod
    def zeros(cls, grid: Grid1D) -> "FVField":
        return cls(np.zeros(grid.n_points, complex), np.zeros(grid.n_points, complex), grid)


def potential_on_grid(V: PotentialSamples, grid: Grid1D) -> np.ndarray:
    """Broadcasts a scalar potential or validates a sampled one against the grid."""
    values = np.asarray(V, dtype=float)
    if values.ndim == 0:
        return np.full(grid.n_points, float(values))
    if values.shape != (grid.n_points,):
        raise GridMismatchError(
            f"Potential has shape {values.shape}, expected ({grid.n_points},) for the grid.")
    check_finite(values, "V")
    return values


def decompose(state: KGState, V: PotentialSamples, units: Units) -> FVField:
    """Splits (psi, psi_dot) into (phi, chi); phi + chi reproduces psi exactly."""
    v = potential_on_grid(V, state.grid) / units.rest_energy
    time_term = (1j * units.hbar / units.rest_energy) * state.psi_dot
    phi = 0.5 * ((1.0 - v) * state.psi + time_term)
    chi = state.psi - phi
    return FVField(phi, chi, state.grid)


def recompose(field: FVField, V: PotentialSamples, units: Units) -> KGState:
    """Inverse of decompose: psi = phi + chi, i hbar psi_dot = mc^2 (phi - chi) + V psi."""
    values = potential_on_grid(V, field.grid)
    psi = field.phi + field.chi
    psi_dot = (-1j / units.hbar) * (units.rest_energy * (field.phi - field.chi) + values * psi)
    return KGState(psi, psi_dot, field.grid)


def charge_density(field: FVField) -> np.ndarray:
    """rho = |phi|^2 - |chi|^2; negative where antiparticle content dominates."""
    return np.abs(field.phi) ** 2 - np.abs(field.chi) ** 2


def charge_density_from_state(state: KGState, V: PotentialSamples, units: Units) -> np.ndarray:
    """rho = (i hbar / 2mc^2)(psi* psi_dot - psi_dot* psi) - (V/mc^2)|psi|^2."""
    values = potential_on_grid(V, state.grid)
    mc2 = units.rest_energy
    psi, psi_dot = state.psi, state.psi_dot
    kinetic = (1j * units.hbar / (2.0 * mc2)) * (np.conj(psi) * psi_dot - np.conj(psi_dot) * psi)
    return kinetic.real - (values / mc2) * np.abs(psi) ** 2


def gradient(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    if grid.n_points < 3:
        raise PreconditionError(f"Central differences need at least 3 grid points, got {grid.n_points}.")
    # second order inside and at the one-sided boundary stencils
    return np.gradient(values, grid.dx, edge_order=2)


def current_density(state: KGState, units: Units) -> np.ndarray:
    """j = (i hbar/2m)(psi grad psi* - psi* grad psi) = (hbar/m) Im(psi* grad psi)."""
    grad = gradient(state.psi, state.grid)
    return (units.hbar / units.m) * np.imag(np.conj(state.psi) * grad)


def current_density_fv(field: FVField, units: Units) -> np.ndarray:
    """The same current written through phi and chi, term by term."""
    phi, chi = field.phi, field.chi
    d_phi = gradient(phi, field.grid)
    d_chi = gradient(chi, field.grid)
    bracket = ((phi * np.conj(d_phi) - np.conj(phi) * d_phi)
               + (chi * np.conj(d_chi) - np.conj(chi) * d_chi)
               + (phi * np.conj(d_chi) - np.conj(chi) * d_phi)
               + (chi * np.conj(d_phi) - np.conj(phi) * d_chi))
    return ((1j * units.hbar / (2.0 * units.m)) * bracket).real


def trapezoid_weights(grid: Grid1D) -> np.ndarray:
    weights = np.full(grid.n_points, grid.dx)
    weights[0] = weights[-1] = 0.5 * grid.dx
    return weights


def total_charge(rho: np.ndarray, grid: Grid1D) -> float:
    """Trapezoid integral of rho over the grid."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (grid.n_points,):
        raise GridMismatchError(f"Density has shape {rho.shape}, expected ({grid.n_points},).")
    return float(trapezoid(rho, dx=grid.dx))


def charge_split(rho: np.ndarray, grid: Grid1D, x_split: float) -> Tuple[float, float]:
    """Charge left of x_split and at/right of it; the two parts add up to the trapezoid total."""
    weighted = trapezoid_weights(grid) * np.asarray(rho, dtype=float)
    right = grid.points() >= x_split
    return float(weighted[~right].sum()), float(weighted[right].sum())


def charge_centroid(field: FVField) -> float:
    """Charge-weighted mean position; sign-safe for antiparticle packets (rho < 0)."""
    rho = charge_density(field)
    q = total_charge(rho, field.grid)
    if q == 0.0:
        raise PreconditionError("Charge centroid is undefined for a field with zero total charge.")
    return total_charge(field.grid.points() * rho, field.grid) / q


def chi_phi_ratio(field: FVField, grid: Optional[Grid1D] = None) -> float:
    """R = int |chi|^2 dx / int |phi|^2 dx; below 1 for positive-energy free states."""
    grid = grid or field.grid
    if not grid.same_as(field.grid):
        raise GridMismatchError("chi_phi_ratio called with a grid different from the field's.")
    phi_norm = trapezoid(np.abs(field.phi) ** 2, dx=grid.dx)
    if phi_norm <= 0.0:
        raise PreconditionError("chi_phi_ratio is undefined: the phi component has zero norm.")
    return float(trapezoid(np.abs(field.chi) ** 2, dx=grid.dx) / phi_norm)
