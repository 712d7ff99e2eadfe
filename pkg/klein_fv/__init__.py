# klein_fv/__init__.py

from .errors import (ConfigError, GridMismatchError, KleinFVError, NumericalError,
                     PreconditionError, SingularMatchingError, StabilityError)
from .core import (ComplexAmplitude, Grid1D, Units, compton_momentum, energy_from_momentum,
                   group_velocity, momentum_from_energy, natural_units, rest_energy)
from .fv import (FVField, KGState, charge_centroid, charge_density, charge_density_from_state,
                 charge_split, chi_phi_ratio, current_density, current_density_fv, decompose,
                 recompose, total_charge)
from .scattering import (PlaneWave, PlaneWaveDensities, Regime, ScatteringSolution, StepPotential,
                         SweepRow, WaveKind, classify_regime, plane_wave_densities,
                         relabel_transmitted, scattering_state, select_branch, solve_step,
                         sweep_reflectivity, transmitted_wave)
from .evolution import (CrankNicolsonPropagator, PotentialKind, PotentialProfile, SimulationRecord,
                        WavepacketSpec, absorbing_mask, build_initial_wavepacket,
                        free_evolution_exact, max_stable_dt, run_simulation, step_evolve)
from .epr import (EPRPair, LinearOperator1D, OperatorCombination, OperatorKind, PairRelation,
                  TwoParticleFunction, TwoParticleGrid, apply_conjugate_operators,
                  apply_standard_operators, build_epr_pair, commutator_convergence,
                  commutator_residual, extrapolated_commutator_residual, gaussian_test_functions,
                  invert_potential, momentum, position, spacetime_inversion)

__version__ = "0.1.0"

__all__ = [
    'KleinFVError', 'PreconditionError', 'GridMismatchError', 'SingularMatchingError',
    'NumericalError', 'StabilityError', 'ConfigError',
    'ComplexAmplitude', 'Units', 'Grid1D', 'natural_units', 'rest_energy', 'compton_momentum',
    'momentum_from_energy', 'energy_from_momentum', 'group_velocity',
    'KGState', 'FVField', 'decompose', 'recompose', 'charge_density', 'charge_density_from_state',
    'current_density', 'current_density_fv', 'total_charge', 'charge_split', 'charge_centroid',
    'chi_phi_ratio',
    'WaveKind', 'PlaneWave', 'StepPotential', 'Regime', 'ScatteringSolution', 'PlaneWaveDensities',
    'SweepRow', 'classify_regime', 'select_branch', 'solve_step', 'plane_wave_densities',
    'transmitted_wave', 'relabel_transmitted', 'scattering_state', 'sweep_reflectivity',
    'PotentialKind', 'PotentialProfile', 'WavepacketSpec', 'SimulationRecord',
    'CrankNicolsonPropagator', 'max_stable_dt', 'build_initial_wavepacket', 'free_evolution_exact',
    'absorbing_mask', 'step_evolve', 'run_simulation',
    'OperatorKind', 'TwoParticleGrid', 'TwoParticleFunction', 'LinearOperator1D',
    'OperatorCombination', 'position', 'momentum', 'commutator_residual', 'gaussian_test_functions',
    'commutator_convergence', 'extrapolated_commutator_residual', 'PairRelation', 'EPRPair', 'build_epr_pair',
    'apply_conjugate_operators', 'apply_standard_operators', 'spacetime_inversion',
    'invert_potential',
    '__version__',
]
