"""
Time evolution of the coupled (phi, chi) system on a 1D grid.

    i hbar d(phi)/dt = (mc^2 + V) phi + K (phi + chi)
    i hbar d(chi)/dt = (V - mc^2) chi - K (phi + chi),      K = -(hbar^2/2m) d^2/dx^2

The integrator is Crank-Nicolson on the interior nodes with the end nodes held at
zero. eta*H (eta = diag(1, -1)) is Hermitian for the discrete operator, so the Cayley
step conserves sum(|phi|^2 - |chi|^2) up to round-off.
"""

import enum
import logging
import math
import dataclasses
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import fft, sparse
from scipy.sparse.linalg import splu
from scipy.special import expit

from .core import Grid1D, Units, check_finite, energy_from_momentum
from .errors import NumericalError, PreconditionError, StabilityError
from .fv import (FVField, KGState, charge_density, charge_split, decompose,
                 total_charge)

logger = logging.getLogger(__name__)

# Relative charge change tolerated in a single step.
DRIFT_BUDGET = 1e-9
# Fraction of the grid, on each side, covered by the absorbing mask.
ABSORBING_FRACTION = 0.1


class PotentialKind(enum.Enum):
    SHARP_STEP = "sharp_step"
    SMOOTH_STEP = "smooth_step"


@dataclass(frozen=True)
class PotentialProfile:
    """A step of height V0 at `center`, either sharp or smoothed over `width`."""

    kind: PotentialKind
    V0: float
    center: float = 0.0
    width: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.V0) and math.isfinite(self.center)):
            raise PreconditionError("Potential height and center must be finite.")
        if self.kind is PotentialKind.SMOOTH_STEP and (self.width is None or not self.width > 0.0):
            raise PreconditionError(f"A smooth step needs a width > 0, got {self.width!r}.")

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is PotentialKind.SHARP_STEP:
            return np.where(x < self.center, 0.0, self.V0)
        return self.V0 * expit((x - self.center) / self.width)

    def sample(self, grid: Grid1D) -> np.ndarray:
        """Values on the grid. Sharp steps are regularized to a smooth step of width 2*dx."""
        if self.kind is PotentialKind.SHARP_STEP:
            return self.regularized(grid).evaluate(grid.points())
        return self.evaluate(grid.points())

    def regularized(self, grid: Grid1D) -> "PotentialProfile":
        if self.kind is PotentialKind.SMOOTH_STEP:
            return self
        return PotentialProfile(PotentialKind.SMOOTH_STEP, self.V0, self.center, 2.0 * grid.dx)


@dataclass(frozen=True)
class WavepacketSpec:
    """Gaussian packet amplitude*exp(-(x - x0)^2 / 4 sigma^2) * exp(i p0 x / hbar)."""

    x0: float
    sigma: float
    p0: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise PreconditionError(f"Packet width sigma must be > 0, got {self.sigma!r}.")
        if not self.amplitude > 0.0:
            raise PreconditionError(f"Packet amplitude must be > 0, got {self.amplitude!r}.")


@dataclass(frozen=True)
class SimulationRecord:
    times: np.ndarray
    Q_total: np.ndarray
    Q_left: np.ndarray
    Q_right: np.ndarray
    max_abs_psi: np.ndarray
    snapshot_times: Tuple[float, ...] = ()
    snapshots: Tuple[FVField, ...] = ()

    def __post_init__(self):
        lengths = {len(self.times), len(self.Q_total), len(self.Q_left), len(self.Q_right), len(self.max_abs_psi)}
        if len(lengths) != 1:
            raise ValueError(f"SimulationRecord series have mismatched lengths {sorted(lengths)}.")
        if len(self.snapshot_times) != len(self.snapshots):
            raise ValueError("Every snapshot needs exactly one time stamp.")

    def charge_drift(self) -> float:
        """max_t |Q_total(t) - Q_total(0)| / |Q_total(0)|"""
        q0 = self.Q_total[0]
        if q0 == 0.0:
            return float(np.max(np.abs(self.Q_total - q0)))
        return float(np.max(np.abs(self.Q_total - q0)) / abs(q0))


def discrete_wavenumbers(grid: Grid1D) -> np.ndarray:
    """Effective wavenumbers of the 3-point Laplacian, in FFT order."""
    k = 2.0 * np.pi * fft.fftfreq(grid.n_points, d=grid.dx)
    return (2.0 / grid.dx) * np.sin(0.5 * k * grid.dx)


def max_stable_dt(grid: Grid1D, V: np.ndarray, units: Units) -> float:
    """Largest step keeping the fastest grid mode below 2 rad of phase per step."""
    p_max = 2.0 * units.hbar / grid.dx
    omega_max = (float(energy_from_momentum(p_max, units)) + float(np.max(np.abs(V)))) / units.hbar
    return 2.0 / omega_max


def _check_packet(spec: WavepacketSpec, grid: Grid1D, potential: Optional[PotentialProfile], units: Units) -> None:
    if not grid.dx < spec.sigma / 8.0:
        raise PreconditionError(f"Grid under-resolves the packet: dx={grid.dx:.4g} must be < sigma/8={spec.sigma / 8:.4g}.")
    if spec.p0 != 0.0 and not grid.dx < units.hbar / (4.0 * abs(spec.p0)):
        raise PreconditionError(
            f"Grid under-resolves the carrier: dx={grid.dx:.4g} must be < hbar/(4|p0|)={units.hbar / (4 * abs(spec.p0)):.4g}.")
    if spec.x0 - 5.0 * spec.sigma < grid.x_min or spec.x0 + 5.0 * spec.sigma > grid.x_max:
        raise PreconditionError("Packet does not fit in the grid: x0 +/- 5 sigma must lie inside [x_min, x_max].")
    if potential is not None and not abs(spec.x0 - potential.center) > 5.0 * spec.sigma:
        raise PreconditionError(
            f"Packet overlaps the step: |x0 - center| = {abs(spec.x0 - potential.center):.4g} must exceed 5 sigma.")
    if spec.sigma * abs(spec.p0) / units.hbar < 3.0:
        logger.warning("Packet has poor momentum resolution: sigma*p0/hbar = %.3g < 3.",
                       spec.sigma * abs(spec.p0) / units.hbar)


def build_initial_wavepacket(spec: WavepacketSpec, grid: Grid1D, units: Units,
                             potential: Optional[PotentialProfile] = None) -> FVField:
    """
    Positive-energy Gaussian packet as an (phi, chi) field.

    psi_dot is set mode by mode in momentum space, each Fourier mode getting its
    positive frequency E(p)/hbar, so the packet carries no antiparticle content.
    """
    _check_packet(spec, grid, potential, units)
    x = grid.points()
    psi = spec.amplitude * np.exp(-((x - spec.x0) ** 2) / (4.0 * spec.sigma ** 2) + 1j * spec.p0 * x / units.hbar)
    energies = energy_from_momentum(units.hbar * discrete_wavenumbers(grid), units)
    psi_dot = fft.ifft((-1j * energies / units.hbar) * fft.fft(psi))
    return decompose(KGState(psi, psi_dot, grid), 0.0, units)


def free_evolution_exact(field: FVField, t: float, units: Units) -> FVField:
    """Evolves a field with V = 0 exactly in Fourier space using the grid's dispersion."""
    kinetic = (units.hbar * discrete_wavenumbers(field.grid)) ** 2 / (2.0 * units.m)
    mc2 = units.rest_energy
    energies = np.sqrt(mc2 ** 2 + 2.0 * mc2 * kinetic)
    phi_k = fft.fft(field.phi)
    chi_k = fft.fft(field.chi)
    # exp(-iHt/hbar) = cos(Et/hbar) - i sin(Et/hbar) H / E, since H^2 = E^2 per mode
    cos = np.cos(energies * t / units.hbar)
    sin_over_e = np.sin(energies * t / units.hbar) / energies
    h_phi = (mc2 + kinetic) * phi_k + kinetic * chi_k
    h_chi = -kinetic * phi_k - (mc2 + kinetic) * chi_k
    phi_t = cos * phi_k - 1j * sin_over_e * h_phi
    chi_t = cos * chi_k - 1j * sin_over_e * h_chi
    return FVField(fft.ifft(phi_t), fft.ifft(chi_t), field.grid)


def absorbing_mask(grid: Grid1D, fraction: float = ABSORBING_FRACTION) -> np.ndarray:
    """1 in the interior, falling smoothly to 0 across the outer `fraction` of the grid on each side."""
    x = grid.points()
    layer = fraction * grid.length
    depth = np.maximum(grid.x_min + layer - x, 0.0) + np.maximum(x - (grid.x_max - layer), 0.0)
    return np.cos(0.5 * np.pi * np.clip(depth / layer, 0.0, 1.0)) ** 0.125


class CrankNicolsonPropagator:
    """Reusable Crank-Nicolson step for a fixed grid, potential and dt."""

    def __init__(self, grid: Grid1D, V: np.ndarray, dt: float, units: Units, absorbing: bool = False):
        if grid.n_points < 3:
            raise PreconditionError(f"Time stepping needs at least 3 grid points, got {grid.n_points}.")
        if not dt > 0.0:
            raise PreconditionError(f"Time step must be > 0, got {dt!r}.")
        V = np.asarray(V, dtype=float)
        dt_max = max_stable_dt(grid, V, units)
        if dt > dt_max:
            raise StabilityError(dt, dt_max)

        self._grid = grid
        self._dt = dt
        self._units = units
        self._mask = absorbing_mask(grid)[1:-1] if absorbing else None
        self._hamiltonian = self._build_hamiltonian(grid, V, units)
        n = self._hamiltonian.shape[0]
        half_step = (0.5j * dt / units.hbar) * self._hamiltonian
        identity = sparse.identity(n, dtype=complex, format="csc")
        self._forward = (identity - half_step).tocsc()
        self._backward = splu((identity + half_step).tocsc())
        logger.debug("Built Crank-Nicolson propagator: n=%d dt=%g dt_max=%g absorbing=%s",
                     grid.n_points, dt, dt_max, absorbing)

    @staticmethod
    def _build_hamiltonian(grid: Grid1D, V: np.ndarray, units: Units) -> sparse.csc_matrix:
        interior = grid.n_points - 2
        scale = units.hbar ** 2 / (2.0 * units.m * grid.dx ** 2)
        kinetic = scale * sparse.diags(
            [-np.ones(interior - 1), 2.0 * np.ones(interior), -np.ones(interior - 1)], [-1, 0, 1])
        v = V[1:-1]
        mc2 = units.rest_energy
        upper_left = sparse.diags(mc2 + v) + kinetic
        lower_right = sparse.diags(v - mc2) - kinetic
        return sparse.bmat([[upper_left, kinetic], [-kinetic, lower_right]], format="csc")

    @property
    def dt(self) -> float:
        return self._dt

    @property
    def absorbing(self) -> bool:
        return self._mask is not None

    def step(self, field: FVField, step_index: Optional[int] = None) -> FVField:
        if not field.grid.same_as(self._grid):
            raise PreconditionError("Field grid does not match the propagator grid.")
        m = self._grid.n_points - 2
        state = np.concatenate([field.phi[1:-1], field.chi[1:-1]])
        advanced = self._backward.solve(self._forward @ state)
        if not np.all(np.isfinite(advanced)):
            raise NumericalError(f"Non-finite values after step {step_index}.", step=step_index)
        if self._mask is None:
            self._check_drift(state, advanced, m, step_index)
        else:
            advanced[:m] *= self._mask
            advanced[m:] *= self._mask

        phi = np.zeros(self._grid.n_points, complex)
        chi = np.zeros(self._grid.n_points, complex)
        phi[1:-1] = advanced[:m]
        chi[1:-1] = advanced[m:]
        return FVField(phi, chi, self._grid)

    def _check_drift(self, before: np.ndarray, after: np.ndarray, m: int, step_index: Optional[int]) -> None:
        def charge_and_norm(u):
            phi2, chi2 = np.abs(u[:m]) ** 2, np.abs(u[m:]) ** 2
            return np.sum(phi2 - chi2), np.sum(phi2 + chi2)

        q_before, norm = charge_and_norm(before)
        q_after, _ = charge_and_norm(after)
        scale = abs(q_before) if abs(q_before) > 1e-3 * norm else norm
        if scale > 0.0 and abs(q_after - q_before) > DRIFT_BUDGET * scale:
            raise NumericalError(
                f"Charge drift {abs(q_after - q_before) / scale:.3g} above budget {DRIFT_BUDGET:g} at step {step_index}.",
                step=step_index)


def step_evolve(field: FVField, V: PotentialProfile, dt: float, units: Units, absorbing: bool = False) -> FVField:
    """Advances (phi, chi) by one Crank-Nicolson step."""
    propagator = CrankNicolsonPropagator(field.grid, V.sample(field.grid), dt, units, absorbing)
    return propagator.step(field, step_index=0)


@dataclass
class _Recorder:
    grid: Grid1D
    units: Units
    split: float
    times: List[float] = dataclasses.field(default_factory=list)
    q_total: List[float] = dataclasses.field(default_factory=list)
    q_left: List[float] = dataclasses.field(default_factory=list)
    q_right: List[float] = dataclasses.field(default_factory=list)
    max_abs_psi: List[float] = dataclasses.field(default_factory=list)
    snapshot_times: List[float] = dataclasses.field(default_factory=list)
    snapshots: List[FVField] = dataclasses.field(default_factory=list)

    def record(self, t: float, current: FVField) -> None:
        rho = charge_density(current)
        left, right = charge_split(rho, self.grid, self.split)
        self.times.append(t)
        self.q_total.append(total_charge(rho, self.grid))
        self.q_left.append(left)
        self.q_right.append(right)
        self.max_abs_psi.append(float(np.max(np.abs(current.psi))))

    def snapshot(self, t: float, current: FVField) -> None:
        self.snapshot_times.append(t)
        self.snapshots.append(current)

    def finish(self) -> SimulationRecord:
        return SimulationRecord(
            times=np.array(self.times), Q_total=np.array(self.q_total), Q_left=np.array(self.q_left),
            Q_right=np.array(self.q_right), max_abs_psi=np.array(self.max_abs_psi),
            snapshot_times=tuple(self.snapshot_times), snapshots=tuple(self.snapshots))


def run_simulation(spec: WavepacketSpec, V: PotentialProfile, grid: Grid1D, t_final: float, dt: float,
                   record_every: int, units: Units, snapshot_every: Optional[int] = None,
                   absorbing: bool = False) -> SimulationRecord:
    """
    Evolves a positive-energy packet against a step and records the charge budget.

    Q_left/Q_right are split at the step center. A record is taken every
    `record_every` steps and at the final step; snapshots every `snapshot_every` steps.
    """
    if record_every < 1:
        raise PreconditionError(f"record_every must be >= 1, got {record_every!r}.")
    if snapshot_every is not None and snapshot_every < 0:
        raise PreconditionError(f"snapshot_every must be >= 0, got {snapshot_every!r}.")
    if t_final < 0.0:
        raise PreconditionError(f"t_final must be >= 0, got {t_final!r}.")
    if not dt > 0.0:
        raise PreconditionError(f"Time step must be > 0, got {dt!r}.")

    values = V.sample(grid)
    dt_max = max_stable_dt(grid, values, units)
    if dt > dt_max:
        raise StabilityError(dt, dt_max)

    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        logger.warning("t_final=%g is not a multiple of dt=%g; running %d steps to t=%g.",
                       t_final, dt, n_steps, n_steps * dt)

    current = build_initial_wavepacket(spec, grid, units, potential=V)
    check_finite(current.phi, "phi")
    recorder = _Recorder(grid, units, V.center)
    recorder.record(0.0, current)
    if snapshot_every:
        recorder.snapshot(0.0, current)
    if n_steps == 0:
        return recorder.finish()

    propagator = CrankNicolsonPropagator(grid, values, dt, units, absorbing)
    logger.info("Running %d steps of dt=%g on %d points (V0=%g, %s).",
                n_steps, dt, grid.n_points, V.V0, V.kind.value)
    for k in range(1, n_steps + 1):
        current = propagator.step(current, step_index=k)
        t = k * dt
        if k % record_every == 0 or k == n_steps:
            recorder.record(t, current)
            logger.debug("t=%.4g Q_total=%.12g Q_left=%.6g Q_right=%.6g",
                         t, recorder.q_total[-1], recorder.q_left[-1], recorder.q_right[-1])
        if snapshot_every and (k % snapshot_every == 0 or k == n_steps):
            recorder.snapshot(t, current)

    result = recorder.finish()
    logger.info("Simulation finished: charge drift %.3g, Q_right(t_final)=%.6g.",
                result.charge_drift(), result.Q_right[-1])
    return result
