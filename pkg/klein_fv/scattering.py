"""
Closed-form plane-wave scattering of a KG particle off the step V(x) = 0 (x < 0), V0 (x > 0).

The incident wave a exp[i(px - Et)/hbar] comes in from the left. Matching psi and
psi' at x = 0 gives

    b/a  = (p - p') / (p + p')
    b'/a = 2p / (p + p')

with the transmitted momentum p' chosen per regime: real and positive below the
step, +i*kappa inside the evanescent window, real and negative in the Klein zone
(V0 > E + mc^2) so that the transmitted flux has the sign of the transmitted charge.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import Grid1D, Units, check_finite, momentum_from_energy
from .errors import KleinFVError, PreconditionError, SingularMatchingError
from .fv import KGState

logger = logging.getLogger(__name__)


class WaveKind(enum.Enum):
    """Whether a plane wave is written with the particle or the antiparticle phase."""
    PARTICLE = 1
    ANTIPARTICLE = 2

    @property
    def phase_sign(self) -> int:
        return 1 if self is WaveKind.PARTICLE else -1

    def flipped(self) -> "WaveKind":
        return WaveKind.ANTIPARTICLE if self is WaveKind.PARTICLE else WaveKind.PARTICLE


@dataclass(frozen=True)
class PlaneWave:
    """
    A single plane wave.

    PARTICLE waves read a*exp[+i(px - Et)/hbar]. ANTIPARTICLE waves read
    a*exp[-i(px - Et)/hbar] with momentum and energy stored as the observed values;
    the underlying labels are their negatives.
    """

    amplitude: complex
    momentum: complex
    energy: float
    kind: WaveKind = WaveKind.PARTICLE

    def __post_init__(self):
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        object.__setattr__(self, "momentum", complex(self.momentum))
        object.__setattr__(self, "energy", float(self.energy))
        check_finite(self.amplitude, "amplitude")
        check_finite(self.momentum, "momentum")
        check_finite(self.energy, "energy")

    @property
    def label_momentum(self) -> complex:
        return self.kind.phase_sign * self.momentum

    @property
    def label_energy(self) -> float:
        return self.kind.phase_sign * self.energy

    def log_derivatives(self, units: Units):
        """(d/dx psi)/psi and (d/dt psi)/psi, exact for the exponential."""
        s = self.kind.phase_sign
        return s * 1j * self.momentum / units.hbar, -s * 1j * self.energy / units.hbar

    def evaluate(self, x, t: float, units: Units) -> np.ndarray:
        s = self.kind.phase_sign
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(s * 1j * (self.momentum * x - self.energy * t) / units.hbar)

    def to_state(self, grid: Grid1D, units: Units, t: float = 0.0) -> KGState:
        """Samples psi and its exact time derivative on the grid."""
        psi = self.evaluate(grid.points(), t, units)
        _, dt_log = self.log_derivatives(units)
        return KGState(psi, dt_log * psi, grid)


@dataclass(frozen=True)
class StepPotential:
    V0: float

    def __post_init__(self):
        if not math.isfinite(self.V0):
            raise PreconditionError(f"Step height must be finite, got {self.V0!r}.")

    def __call__(self, x):
        return np.where(np.asarray(x) < 0.0, 0.0, self.V0)


class Regime(enum.Enum):
    TRANSMISSION = "Transmission"
    EVANESCENT = "Evanescent"
    KLEIN_ZONE = "KleinZone"


@dataclass(frozen=True)
class ScatteringSolution:
    E: float
    V0: float
    p: float
    p_prime: complex
    b_over_a: complex
    bprime_over_a: complex
    R: float
    T: float
    regime: Regime

    def invariant_checks(self, tol: float = 1e-12) -> Dict[str, bool]:
        """Named pass/fail results for the solution's invariants."""
        scale = max(1.0, abs(self.R))
        checks = {
            "R_is_modulus_squared": abs(self.R - abs(self.b_over_a) ** 2) <= tol * scale,
            "R_plus_T_is_one": abs(self.R + self.T - 1.0) <= tol * scale,
        }
        if self.regime is Regime.KLEIN_ZONE:
            checks["klein_signs"] = self.p_prime.real < 0.0 and self.R > 1.0 and self.T < 0.0
        elif self.regime is Regime.EVANESCENT:
            checks["evanescent_total_reflection"] = (
                self.p_prime.real == 0.0 and self.p_prime.imag >= 0.0 and abs(self.R - 1.0) <= tol)
        else:
            checks["partial_reflection"] = 0.0 <= self.R < 1.0
        return checks


@dataclass(frozen=True)
class PlaneWaveDensities:
    """Charge and current densities of the incident, reflected and transmitted waves."""

    rho_i: float
    j_i: float
    rho_r: float
    j_r: float
    rho_t: float
    j_t: float

    @property
    def flux_residual(self) -> float:
        return self.j_i + self.j_r - self.j_t


@dataclass(frozen=True)
class SweepRow:
    V0: float
    R: Optional[float] = None
    T: Optional[float] = None
    regime: Optional[Regime] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _require_propagating(E: float, units: Units) -> None:
    if not math.isfinite(E) or E <= units.rest_energy:
        raise PreconditionError(
            f"E below rest energy: E={E!r} must exceed mc^2={units.rest_energy!r} for a propagating incident wave.")


def classify_regime(E: float, V0: float, units: Units) -> Regime:
    """Boundary values V0 = E -/+ mc^2 count as evanescent."""
    _require_propagating(E, units)
    mc2 = units.rest_energy
    if V0 < E - mc2:
        return Regime.TRANSMISSION
    if V0 > E + mc2:
        return Regime.KLEIN_ZONE
    return Regime.EVANESCENT


def select_branch(E: float, V0: float, units: Units) -> complex:
    """The physical transmitted momentum p' for the regime of (E, V0)."""
    regime = classify_regime(E, V0, units)
    root = momentum_from_energy(E, V0, units)
    if regime is Regime.TRANSMISSION:
        return complex(abs(root.real), 0.0)
    if regime is Regime.KLEIN_ZONE:
        return complex(-abs(root.real), 0.0)
    # principal root already has Im >= 0: decaying wave to the right
    return complex(0.0, abs(root.imag))


def solve_step(E: float, V0: float, units: Units) -> ScatteringSolution:
    """Reflection and transmission coefficients of the step for an incident wave of energy E."""
    regime = classify_regime(E, V0, units)
    p = momentum_from_energy(E, 0.0, units).real
    p_prime = select_branch(E, V0, units)
    denominator = p + p_prime
    if abs(denominator) <= 1e-12 * (abs(p) + abs(p_prime)):
        raise SingularMatchingError(
            f"Singular matching at E={E!r}, V0={V0!r}: p + p' = 0 (V0 = 2E), reflectivity diverges.")
    b_over_a = (p - p_prime) / denominator
    bprime_over_a = 2.0 * p / denominator
    R = abs(b_over_a) ** 2
    T = p_prime.real * abs(bprime_over_a) ** 2 / p
    logger.debug("solve_step E=%g V0=%g regime=%s R=%g T=%g", E, V0, regime.value, R, T)
    return ScatteringSolution(E=E, V0=V0, p=p, p_prime=p_prime, b_over_a=b_over_a,
                              bprime_over_a=bprime_over_a, R=R, T=T, regime=regime)


def plane_wave_densities(sol: ScatteringSolution, a: complex, units: Units) -> PlaneWaveDensities:
    mc2 = units.rest_energy
    m = units.m
    a2 = abs(a) ** 2
    b2 = abs(sol.b_over_a * a) ** 2
    bp2 = abs(sol.bprime_over_a * a) ** 2
    return PlaneWaveDensities(
        rho_i=(sol.E / mc2) * a2,
        j_i=(sol.p / m) * a2,
        rho_r=(sol.E / mc2) * b2,
        j_r=-(sol.p / m) * b2,
        rho_t=((sol.E - sol.V0) / mc2) * bp2,
        j_t=(sol.p_prime.real / m) * bp2,
    )


def transmitted_wave(sol: ScatteringSolution, a: complex) -> PlaneWave:
    """b' exp[i(p'x - E't)/hbar] with the local energy E' = E - V0 seen right of the step."""
    return PlaneWave(sol.bprime_over_a * a, sol.p_prime, sol.E - sol.V0, WaveKind.PARTICLE)


def relabel_transmitted(sol: ScatteringSolution, a: complex) -> PlaneWave:
    """
    Rewrites the Klein-zone transmitted wave as a right-moving antiparticle
    b' exp[-i(|p'|x - |E'|t)/hbar] with observed |p'| > 0 and |E'| = V0 - E > 0.
    """
    if sol.regime is not Regime.KLEIN_ZONE:
        raise PreconditionError(
            f"relabel_transmitted applies only in the Klein zone, regime is {sol.regime.value}.")
    return PlaneWave(sol.bprime_over_a * a, abs(sol.p_prime.real), sol.V0 - sol.E, WaveKind.ANTIPARTICLE)


def scattering_state(sol: ScatteringSolution, grid: Grid1D, a: complex, units: Units, t: float = 0.0) -> KGState:
    """Stationary psi on a grid: incident + reflected for x < 0, transmitted for x >= 0."""
    x = grid.points()
    phase = np.exp(-1j * sol.E * t / units.hbar)
    left = a * np.exp(1j * sol.p * x / units.hbar) + sol.b_over_a * a * np.exp(-1j * sol.p * x / units.hbar)
    right = sol.bprime_over_a * a * np.exp(1j * sol.p_prime * x / units.hbar)
    psi = np.where(x < 0.0, left, right) * phase
    return KGState(psi, (-1j * sol.E / units.hbar) * psi, grid)


def sweep_reflectivity(E: float, V0_list: Sequence[float], units: Units) -> List[SweepRow]:
    """One row per V0; failing entries carry their error message instead of aborting the sweep."""
    _require_propagating(E, units)
    rows: List[SweepRow] = []
    for V0 in V0_list:
        try:
            sol = solve_step(E, float(V0), units)
        except KleinFVError as exc:
            logger.warning("Sweep entry V0=%g failed: %s", V0, exc)
            rows.append(SweepRow(V0=float(V0), regime=classify_regime(E, float(V0), units), error=str(exc)))
            continue
        rows.append(SweepRow(V0=float(V0), R=sol.R, T=sol.T, regime=sol.regime))
    return rows
