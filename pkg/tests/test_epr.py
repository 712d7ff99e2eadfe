import math
import unittest

import numpy as np

from klein_fv import (FVField, Grid1D, LinearOperator1D, OperatorKind, PairRelation, PlaneWave,
                      PreconditionError, TwoParticleFunction, TwoParticleGrid, Units, WaveKind,
                      WavepacketSpec, apply_conjugate_operators, apply_standard_operators,
                      build_epr_pair, build_initial_wavepacket, charge_centroid, charge_density,
                      chi_phi_ratio, commutator_convergence, commutator_residual,
                      extrapolated_commutator_residual, free_evolution_exact,
                      gaussian_test_functions, invert_potential, momentum, natural_units, position,
                      relabel_transmitted, solve_step, spacetime_inversion, total_charge)

UNITS = natural_units()
RELATIVE = (position(1) - position(2), momentum(1) + momentum(2))
CENTRE = (position(1) + position(2), momentum(1) - momentum(2))


class TestTwoParticleFunction(unittest.TestCase):

    def setUp(self):
        self.grid = TwoParticleGrid.square(Grid1D(-8.0, 8.0, 401))

    def test_product_gaussian_norm(self):
        """||g h|| = sqrt(pi w1 w2) for exp(-x^2 / 2w^2) factors."""
        f = TwoParticleFunction.gaussian(self.grid, widths=(1.0, 1.3))
        self.assertAlmostEqual(f.norm(), math.sqrt(math.pi * 1.3), places=8)

    def test_simplified_merges_and_cancels(self):
        f = TwoParticleFunction.gaussian(self.grid)
        self.assertEqual(len((f + f).simplified().terms), 1)
        self.assertAlmostEqual((f + f).simplified().norm(), 2.0 * f.norm(), places=10)
        self.assertEqual((f - f).simplified().terms, ())
        self.assertEqual((f - f).simplified().norm(), 0.0)

    def test_dense_matches_factors(self):
        small = TwoParticleGrid.square(Grid1D(-1.0, 1.0, 5))
        g = np.arange(5.0)
        f = TwoParticleFunction.product(g, np.ones(5), small)
        np.testing.assert_array_equal(f.to_array(), np.outer(g, np.ones(5)))

    def test_factor_shape_is_checked(self):
        with self.assertRaises(PreconditionError):
            TwoParticleFunction.product(np.ones(3), np.ones(401), self.grid)


class TestCommutators(unittest.TestCase):

    def setUp(self):
        self.grid = TwoParticleGrid.square(Grid1D(-8.0, 8.0, 2048))

    def test_pair_commutators_vanish(self):
        """[x1 - x2, p1 + p2] and [x1 + x2, p1 - p2] vanish in the continuum estimate."""
        self.assertLess(extrapolated_commutator_residual(*RELATIVE, self.grid, UNITS), 1e-6)
        self.assertLess(extrapolated_commutator_residual(*CENTRE, self.grid, UNITS), 1e-6)

    def test_raw_residual_is_stencil_sized(self):
        raw = commutator_residual(*RELATIVE, gaussian_test_functions(self.grid), UNITS)
        self.assertGreater(raw, 0.0)
        self.assertLess(raw, 1e-3)

    def test_canonical_control(self):
        """[x1, p1] keeps its i*hbar: the residual stays near hbar, whatever hbar is."""
        functions = gaussian_test_functions(self.grid)
        self.assertAlmostEqual(commutator_residual(position(1), momentum(1), functions, UNITS), 1.0, delta=1e-3)
        units = Units(hbar=2.0)
        self.assertAlmostEqual(commutator_residual(position(1), momentum(1), functions, units), 2.0, delta=2e-3)

    def test_cross_particle_commutator_is_exact(self):
        functions = gaussian_test_functions(self.grid)
        self.assertEqual(commutator_residual(position(1), momentum(2), functions, UNITS), 0.0)

    def test_second_order_convergence(self):
        results = commutator_convergence(*RELATIVE, TwoParticleGrid.square(Grid1D(-8.0, 8.0, 129)), 3, UNITS)
        self.assertEqual([n for n, _ in results], [129, 257, 513])
        for (_, coarse), (_, fine) in zip(results, results[1:]):
            self.assertGreater(coarse / fine, 3.5)
            self.assertLess(coarse / fine, 4.5)

    def test_bad_arguments(self):
        with self.assertRaises(PreconditionError):
            commutator_residual(*RELATIVE, [], UNITS)
        n = self.grid.grid1.n_points
        with self.assertRaisesRegex(PreconditionError, "nonzero norm"):
            commutator_residual(*RELATIVE, [TwoParticleFunction.product(np.zeros(n), np.ones(n), self.grid)], UNITS)
        with self.assertRaises(PreconditionError):
            commutator_convergence(*RELATIVE, self.grid, 0, UNITS)
        with self.assertRaises(PreconditionError):
            LinearOperator1D(OperatorKind.MOMENTUM, 3)
        with self.assertRaises(PreconditionError):
            LinearOperator1D(OperatorKind.ENERGY).apply(TwoParticleFunction.gaussian(self.grid), UNITS)


class TestEPRPair(unittest.TestCase):

    def test_opposite_momenta_pair(self):
        """Labels (-p1, -E1) for the partner, observed (p1, E1) under the conjugate operators."""
        pair = build_epr_pair(0.75, UNITS)
        self.assertEqual(pair.wave2.kind, WaveKind.ANTIPARTICLE)
        self.assertEqual(apply_standard_operators(pair.wave1, UNITS), (0.75, 1.25))
        self.assertEqual(apply_conjugate_operators(pair.wave2, UNITS), (0.75, 1.25))
        self.assertEqual(pair.wave2.label_momentum.real, -0.75)
        self.assertEqual(pair.wave2.label_energy, -1.25)
        self.assertEqual(pair.total_label_momentum(), 0.0)
        self.assertEqual(pair.separation_rate(UNITS), 0.0)

    def test_opposite_positions_pair(self):
        pair = build_epr_pair(0.75, UNITS, PairRelation.OPPOSITE_POSITIONS_FIXED_TOTAL_MOMENTUM)
        p_obs, e_obs = apply_conjugate_operators(pair.wave2, UNITS)
        self.assertEqual(p_obs, -0.75)
        self.assertEqual(e_obs, 1.25)
        self.assertAlmostEqual(pair.separation_rate(UNITS), 1.2, places=12)

    def test_degenerate_pair(self):
        with self.assertRaisesRegex(PreconditionError, "degenerate pair"):
            build_epr_pair(0.0, UNITS)

    def test_operator_kind_mismatch(self):
        pair = build_epr_pair(0.75, UNITS)
        with self.assertRaises(PreconditionError):
            apply_standard_operators(pair.wave2, UNITS)
        with self.assertRaises(PreconditionError):
            apply_conjugate_operators(pair.wave1, UNITS)

    def test_relabeled_klein_wave_observed_values(self):
        """E = 1.25, V0 = 3: the transmitted antiparticle is observed at (1.43614, 1.75)."""
        wave = relabel_transmitted(solve_step(1.25, 3.0, UNITS), 1.0)
        p_obs, e_obs = apply_conjugate_operators(wave, UNITS)
        self.assertAlmostEqual(p_obs, 1.43614, delta=1e-5)
        self.assertAlmostEqual(e_obs, 1.75, places=12)

    def test_constant_wave(self):
        self.assertEqual(apply_conjugate_operators(PlaneWave(1.0, 0.0, 0.0, WaveKind.ANTIPARTICLE), UNITS),
                         (0.0, 0.0))

    def test_pair_wavefunction_is_a_product(self):
        grid = TwoParticleGrid.square(Grid1D(-2.0, 2.0, 9))
        f = build_epr_pair(0.75, UNITS).wavefunction(grid, UNITS)
        self.assertEqual(len(f.terms), 1)
        np.testing.assert_allclose(np.abs(f.to_array()), 1.0)


class TestSpacetimeInversion(unittest.TestCase):

    def setUp(self):
        self.grid = Grid1D(-60.0, 60.0, 2049)
        self.packet = build_initial_wavepacket(WavepacketSpec(-20.0, 5.0, 0.75), self.grid, UNITS)

    def test_plane_wave(self):
        wave = PlaneWave(1.0, 0.75, 1.25)
        inverted = spacetime_inversion(wave)
        self.assertEqual(inverted.kind, WaveKind.ANTIPARTICLE)
        self.assertEqual(spacetime_inversion(inverted), wave)
        x = np.linspace(-3.0, 3.0, 7)
        np.testing.assert_allclose(inverted.evaluate(x, 0.4, UNITS), wave.evaluate(-x, -0.4, UNITS), rtol=1e-13)

    def test_packet_becomes_antiparticle_packet(self):
        inverted = spacetime_inversion(self.packet)
        self.assertEqual(self.packet.master, "phi")
        self.assertEqual(inverted.master, "chi")
        q = total_charge(charge_density(self.packet), self.grid)
        self.assertAlmostEqual(total_charge(charge_density(inverted), self.grid), -q, delta=1e-12 * q)
        self.assertAlmostEqual(charge_centroid(inverted), 20.0, places=6)
        self.assertAlmostEqual(chi_phi_ratio(inverted), 1.0 / chi_phi_ratio(self.packet), places=8)

    def test_involution(self):
        twice = spacetime_inversion(spacetime_inversion(self.packet))
        np.testing.assert_array_equal(twice.phi, self.packet.phi)
        np.testing.assert_array_equal(twice.chi, self.packet.chi)

    def test_pair_keeps_its_separation(self):
        """A packet and its inverted partner move together under free evolution."""
        partner = spacetime_inversion(self.packet)
        start = charge_centroid(self.packet) - charge_centroid(partner)
        self.assertAlmostEqual(start, -40.0, places=6)
        for t in (5.0, 10.0):
            moved = free_evolution_exact(self.packet, t, UNITS)
            moved_partner = free_evolution_exact(partner, t, UNITS)
            self.assertGreater(charge_centroid(moved), -20.0 + 0.5 * t)
            self.assertAlmostEqual(charge_centroid(moved) - charge_centroid(moved_partner), start, delta=1e-6)

    def test_needs_symmetric_grid(self):
        field = FVField.zeros(Grid1D(-1.0, 2.0, 11))
        with self.assertRaisesRegex(PreconditionError, "symmetric about x = 0"):
            spacetime_inversion(field)
        with self.assertRaises(TypeError):
            spacetime_inversion(1.0)

    def test_invert_potential(self):
        np.testing.assert_array_equal(invert_potential([0.0, 1.0, 2.0]), [-2.0, -1.0, 0.0])


if __name__ == '__main__':
    unittest.main()
