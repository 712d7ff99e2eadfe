"""
EPR pair construction, particle/antiparticle operators and the space-time inversion.

Operators (standard vs conjugate):

    p   = -i hbar d/dx      E   = +i hbar d/dt
    p_c = +i hbar d/dx      E_c = -i hbar d/dt

The antiparticle wave a*exp[-i(px - Et)/hbar] is an eigenfunction of p_c and E_c
with the positive eigenvalues p and E.

Two-particle functions live on the tensor grid (x1, x2) stored as a sum of products
g_k(x1) h_k(x2), so operators acting on one particle touch one factor only.
"""

import enum
import functools
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import Grid1D, Units, energy_from_momentum, group_velocity, natural_units
from .errors import GridMismatchError, PreconditionError
from .fv import FVField, gradient, trapezoid_weights
from .scattering import PlaneWave, WaveKind

logger = logging.getLogger(__name__)


class OperatorKind(enum.Enum):
    POSITION = "x"
    MOMENTUM = "p"
    MOMENTUM_CONJUGATE = "p_c"
    ENERGY = "E"
    ENERGY_CONJUGATE = "E_c"


# Prefactor of the derivative for each differential operator, in units of hbar.
_DERIVATIVE_PREFACTOR = {
    OperatorKind.MOMENTUM: -1j,
    OperatorKind.MOMENTUM_CONJUGATE: 1j,
    OperatorKind.ENERGY: 1j,
    OperatorKind.ENERGY_CONJUGATE: -1j,
}


@dataclass(frozen=True)
class TwoParticleGrid:
    grid1: Grid1D
    grid2: Grid1D

    @classmethod
    def square(cls, grid: Grid1D) -> "TwoParticleGrid":
        return cls(grid, grid)

    def factor_grid(self, particle_index: int) -> Grid1D:
        return self.grid1 if particle_index == 1 else self.grid2

    def refined(self, factor: int = 2) -> "TwoParticleGrid":
        return TwoParticleGrid(self.grid1.refined(factor), self.grid2.refined(factor))


@dataclass(frozen=True)
class TwoParticleFunction:
    """f(x1, x2) = sum_k c_k g_k(x1) h_k(x2) on a tensor grid."""

    terms: Tuple[Tuple[complex, np.ndarray, np.ndarray], ...]
    grid: TwoParticleGrid

    def __post_init__(self):
        for _, g, h in self.terms:
            if g.shape != (self.grid.grid1.n_points,) or h.shape != (self.grid.grid2.n_points,):
                raise GridMismatchError("Two-particle factor does not match its tensor grid.")

    @classmethod
    def product(cls, g: np.ndarray, h: np.ndarray, grid: TwoParticleGrid) -> "TwoParticleFunction":
        return cls(((1.0 + 0j, np.asarray(g, complex), np.asarray(h, complex)),), grid)

    @classmethod
    def gaussian(cls, grid: TwoParticleGrid, centers=(0.0, 0.0), widths=(1.0, 1.0)) -> "TwoParticleFunction":
        x1, x2 = grid.grid1.points(), grid.grid2.points()
        g = np.exp(-0.5 * ((x1 - centers[0]) / widths[0]) ** 2)
        h = np.exp(-0.5 * ((x2 - centers[1]) / widths[1]) ** 2)
        return cls.product(g, h, grid)

    def __add__(self, other: "TwoParticleFunction") -> "TwoParticleFunction":
        if other.grid != self.grid:
            raise GridMismatchError("Cannot add two-particle functions on different grids.")
        return TwoParticleFunction(self.terms + other.terms, self.grid)

    def scaled(self, factor: complex) -> "TwoParticleFunction":
        return TwoParticleFunction(tuple((factor * c, g, h) for c, g, h in self.terms), self.grid)

    def __sub__(self, other: "TwoParticleFunction") -> "TwoParticleFunction":
        return self + other.scaled(-1.0)

    def map_factor(self, particle_index: int, fn: Callable[[np.ndarray], np.ndarray]) -> "TwoParticleFunction":
        if particle_index == 1:
            terms = tuple((c, fn(g), h) for c, g, h in self.terms)
        else:
            terms = tuple((c, g, fn(h)) for c, g, h in self.terms)
        return TwoParticleFunction(terms, self.grid)

    def simplified(self) -> "TwoParticleFunction":
        """Merges terms sharing an identical second factor, then those sharing a first factor."""
        def merge(terms, key_index):
            other_index = 3 - key_index
            groups: List[list] = []
            for term in terms:
                for group in groups:
                    key = group[0][key_index]
                    if key is term[key_index] or np.array_equal(key, term[key_index]):
                        group.append(term)
                        break
                else:
                    groups.append([term])
            merged = []
            for group in groups:
                if len(group) == 1:
                    merged.append(group[0])
                    continue
                summed = sum(term[0] * term[other_index] for term in group)
                shared = group[0][key_index]
                merged.append((1.0 + 0j, summed, shared) if key_index == 2 else (1.0 + 0j, shared, summed))
            return [t for t in merged if t[0] != 0 and np.any(t[1]) and np.any(t[2])]

        return TwoParticleFunction(tuple(merge(merge(list(self.terms), 2), 1)), self.grid)

    def norm(self) -> float:
        """Discrete L2 norm with trapezoid weights, from the Gram matrices of the factors."""
        if not self.terms:
            return 0.0
        w1 = trapezoid_weights(self.grid.grid1)
        w2 = trapezoid_weights(self.grid.grid2)
        coefficients = np.array([c for c, _, _ in self.terms])
        first = np.array([g for _, g, _ in self.terms])
        second = np.array([h for _, _, h in self.terms])
        gram = (np.conj(first) * w1) @ first.T * ((np.conj(second) * w2) @ second.T)
        value = np.real(np.conj(coefficients) @ gram @ coefficients)
        return float(np.sqrt(max(value, 0.0)))

    def to_array(self) -> np.ndarray:
        """Dense f[i1, i2]; only for small grids."""
        out = np.zeros((self.grid.grid1.n_points, self.grid.grid2.n_points), complex)
        for c, g, h in self.terms:
            out += c * np.outer(g, h)
        return out


@dataclass(frozen=True)
class LinearOperator1D:
    """A single-particle operator acting on particle 1 or 2."""

    kind: OperatorKind
    particle_index: int = 1

    def __post_init__(self):
        if self.particle_index not in (1, 2):
            raise PreconditionError(f"particle_index must be 1 or 2, got {self.particle_index!r}.")

    def apply(self, f: TwoParticleFunction, units: Units) -> TwoParticleFunction:
        grid = f.grid.factor_grid(self.particle_index)
        if self.kind is OperatorKind.POSITION:
            x = grid.points()
            return f.map_factor(self.particle_index, lambda values: x * values)
        if self.kind in (OperatorKind.ENERGY, OperatorKind.ENERGY_CONJUGATE):
            raise PreconditionError("Energy operators are evaluated on plane waves only (see eigenvalue).")
        prefactor = _DERIVATIVE_PREFACTOR[self.kind] * units.hbar
        return f.map_factor(self.particle_index, lambda values: prefactor * gradient(values, grid))

    def eigenvalue(self, wave: PlaneWave, units: Units) -> complex:
        """Exact eigenvalue on a plane wave, from the wave's logarithmic derivatives."""
        if self.kind is OperatorKind.POSITION:
            raise PreconditionError("Plane waves are not position eigenstates.")
        dx_log, dt_log = wave.log_derivatives(units)
        derivative = dx_log if self.kind in (OperatorKind.MOMENTUM, OperatorKind.MOMENTUM_CONJUGATE) else dt_log
        return _DERIVATIVE_PREFACTOR[self.kind] * units.hbar * derivative

    def _combination(self) -> "OperatorCombination":
        return OperatorCombination(((1.0 + 0j, self),))

    def __add__(self, other):
        return self._combination() + other

    def __sub__(self, other):
        return self._combination() - other

    def __neg__(self):
        return -self._combination()

    def __rmul__(self, scalar):
        return scalar * self._combination()


@dataclass(frozen=True)
class OperatorCombination:
    """Linear combination sum_k c_k A_k of single-particle operators."""

    terms: Tuple[Tuple[complex, LinearOperator1D], ...]

    @staticmethod
    def coerce(value) -> "OperatorCombination":
        if isinstance(value, LinearOperator1D):
            return value._combination()
        if isinstance(value, OperatorCombination):
            return value
        raise TypeError(f"Expected an operator, got {type(value).__name__}.")

    def apply(self, f: TwoParticleFunction, units: Units) -> TwoParticleFunction:
        result = TwoParticleFunction((), f.grid)
        for c, op in self.terms:
            result = result + op.apply(f, units).scaled(c)
        return result

    def __add__(self, other):
        return OperatorCombination(self.terms + OperatorCombination.coerce(other).terms)

    def __sub__(self, other):
        return self + (-OperatorCombination.coerce(other))

    def __neg__(self):
        return OperatorCombination(tuple((-c, op) for c, op in self.terms))

    def __rmul__(self, scalar):
        return OperatorCombination(tuple((scalar * c, op) for c, op in self.terms))


Operator = Union[LinearOperator1D, OperatorCombination]


def position(particle_index: int) -> LinearOperator1D:
    return LinearOperator1D(OperatorKind.POSITION, particle_index)


def momentum(particle_index: int) -> LinearOperator1D:
    return LinearOperator1D(OperatorKind.MOMENTUM, particle_index)


def commutator_residual(A: Operator, B: Operator, test_functions: Sequence[TwoParticleFunction],
                        units: Optional[Units] = None) -> float:
    """max over f of ||[A, B] f|| / ||f||, with the grid difference stencils."""
    units = units or natural_units()
    if not test_functions:
        raise PreconditionError("commutator_residual needs at least one test function.")
    grid = test_functions[0].grid
    A, B = OperatorCombination.coerce(A), OperatorCombination.coerce(B)
    worst = 0.0
    for f in test_functions:
        if f.grid != grid:
            raise GridMismatchError("All test functions must share one two-particle grid.")
        f_norm = f.norm()
        if f_norm == 0.0:
            raise PreconditionError("commutator_residual needs test functions with nonzero norm.")
        commuted = (A.apply(B.apply(f, units), units) - B.apply(A.apply(f, units), units)).simplified()
        worst = max(worst, commuted.norm() / f_norm)
    return worst


def gaussian_test_functions(grid: TwoParticleGrid) -> List[TwoParticleFunction]:
    """Smooth product Gaussians, negligible at the edges of a [-8, 8] grid, with unequal widths."""
    shapes = [((0.0, 0.0), (1.0, 1.3)), ((0.5, -0.5), (1.2, 0.9)), ((-0.4, 0.3), (0.8, 1.1))]
    return [TwoParticleFunction.gaussian(grid, centers, widths) for centers, widths in shapes]


def commutator_convergence(A: Operator, B: Operator, grid: TwoParticleGrid, levels: int,
                           units: Optional[Units] = None) -> List[Tuple[int, float]]:
    """Residuals on `levels` successively halved grids, as (points per axis, residual)."""
    if levels < 1:
        raise PreconditionError(f"levels must be >= 1, got {levels!r}.")
    results = []
    for _ in range(levels):
        residual = commutator_residual(A, B, gaussian_test_functions(grid), units)
        results.append((grid.grid1.n_points, residual))
        grid = grid.refined(2)
    return results


def extrapolated_commutator_residual(A: Operator, B: Operator, grid: TwoParticleGrid,
                                     units: Optional[Units] = None) -> float:
    """
    Continuum estimate of the residual from `grid` and its 2x refinement.

    The stencil residual behaves as a*dx^2 + b*dx^4, so (4 r(dx/2) - r(dx)) / 3
    cancels the leading term and leaves the O(dx^4) remainder.
    """
    (_, coarse), (_, fine) = commutator_convergence(A, B, grid, 2, units)
    return abs(4.0 * fine - coarse) / 3.0


class PairRelation(enum.Enum):
    OPPOSITE_MOMENTA_FIXED_SEPARATION = "opposite_momenta_fixed_separation"
    OPPOSITE_POSITIONS_FIXED_TOTAL_MOMENTUM = "opposite_positions_fixed_total_momentum"


@dataclass(frozen=True)
class EPRPair:
    wave1: PlaneWave
    wave2: PlaneWave
    relation: PairRelation

    def __post_init__(self):
        if self.wave1.kind is not WaveKind.PARTICLE or self.wave2.kind is not WaveKind.ANTIPARTICLE:
            raise PreconditionError("An EPR pair is a particle (wave1) with an antiparticle (wave2).")

    def total_label_momentum(self) -> complex:
        """p1 + p2 with the underlying labels; zero for the opposite-momenta pair."""
        return self.wave1.label_momentum + self.wave2.label_momentum

    def separation_rate(self, units: Units) -> float:
        """d/dt (x1 - x2) from the observed group velocities of the two members."""
        v1 = group_velocity(self.wave1.momentum.real, units)
        v2 = group_velocity(self.wave2.momentum.real, units)
        return float(v1 - v2)

    def wavefunction(self, grid: TwoParticleGrid, units: Units, t: float = 0.0) -> TwoParticleFunction:
        return TwoParticleFunction.product(self.wave1.evaluate(grid.grid1.points(), t, units),
                                           self.wave2.evaluate(grid.grid2.points(), t, units), grid)


def build_epr_pair(p1: float, units: Units,
                   relation: PairRelation = PairRelation.OPPOSITE_MOMENTA_FIXED_SEPARATION) -> EPRPair:
    """
    Particle exp[+i(p1 x - E1 t)/hbar] with its antiparticle partner.

    For the opposite-momenta relation the partner is exp[-i(p1 x - E1 t)/hbar]: labels
    (-p1, -E1), observed (p1, E1). For the opposite-positions relation the partner
    moves the other way, observed momentum -p1.
    """
    E1 = float(energy_from_momentum(p1, units))
    if relation is PairRelation.OPPOSITE_MOMENTA_FIXED_SEPARATION:
        if p1 == 0.0:
            raise PreconditionError("degenerate pair: p1 = 0 has no opposite-momenta partner.")
        partner_momentum = p1
    else:
        partner_momentum = -p1
    pair = EPRPair(PlaneWave(1.0, p1, E1, WaveKind.PARTICLE),
                   PlaneWave(1.0, partner_momentum, E1, WaveKind.ANTIPARTICLE), relation)
    logger.debug("Built EPR pair p1=%g E1=%g relation=%s", p1, E1, relation.value)
    return pair


def _real_if_close(value: complex, scale: float) -> Union[float, complex]:
    if abs(value.imag) <= 1e-14 * max(1.0, scale):
        return float(value.real)
    return value


def apply_conjugate_operators(w: PlaneWave, units: Optional[Units] = None) -> Tuple[Union[float, complex], float]:
    """Observed (momentum, energy) of an antiparticle wave: eigenvalues of p_c and E_c."""
    units = units or natural_units()
    if w.kind is not WaveKind.ANTIPARTICLE:
        raise PreconditionError("Conjugate operators apply to antiparticle waves; use p and E for particles.")
    p_obs = LinearOperator1D(OperatorKind.MOMENTUM_CONJUGATE).eigenvalue(w, units)
    e_obs = LinearOperator1D(OperatorKind.ENERGY_CONJUGATE).eigenvalue(w, units)
    scale = abs(w.momentum) + abs(w.energy)
    return _real_if_close(p_obs, scale), float(_real_if_close(e_obs, scale).real)


def apply_standard_operators(w: PlaneWave, units: Optional[Units] = None) -> Tuple[Union[float, complex], float]:
    units = units or natural_units()
    if w.kind is not WaveKind.PARTICLE:
        raise PreconditionError("Standard operators apply to particle waves; use p_c and E_c for antiparticles.")
    p_obs = LinearOperator1D(OperatorKind.MOMENTUM).eigenvalue(w, units)
    e_obs = LinearOperator1D(OperatorKind.ENERGY).eigenvalue(w, units)
    scale = abs(w.momentum) + abs(w.energy)
    return _real_if_close(p_obs, scale), float(_real_if_close(e_obs, scale).real)


@functools.singledispatch
def spacetime_inversion(state):
    """(x, t) -> (-x, -t) with phi <-> chi; maps a particle state to its antiparticle state."""
    raise TypeError(f"spacetime_inversion does not handle {type(state).__name__}.")


@spacetime_inversion.register
def _(state: PlaneWave) -> PlaneWave:
    # psi(-x, -t) of a*exp[s i(px - Et)/hbar] is a*exp[-s i(px - Et)/hbar]
    return PlaneWave(state.amplitude, state.momentum, state.energy, state.kind.flipped())


@spacetime_inversion.register
def _(state: FVField) -> FVField:
    if not state.grid.is_symmetric():
        raise PreconditionError(
            f"spacetime_inversion needs a grid symmetric about x = 0, got [{state.grid.x_min}, {state.grid.x_max}].")
    return FVField(state.chi[::-1].copy(), state.phi[::-1].copy(), state.grid)


def invert_potential(V: np.ndarray) -> np.ndarray:
    """V(-x) -> -V(x), the potential's part of the inversion symmetry."""
    return -np.asarray(V, dtype=float)[::-1]
