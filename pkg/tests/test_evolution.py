import unittest

import numpy as np

from klein_fv import (CrankNicolsonPropagator, FVField, Grid1D, PotentialKind, PotentialProfile,
                      PreconditionError, StabilityError, WavepacketSpec, absorbing_mask,
                      build_initial_wavepacket, charge_centroid, charge_density, chi_phi_ratio,
                      energy_from_momentum, free_evolution_exact, group_velocity, max_stable_dt,
                      natural_units, recompose, run_simulation, solve_step, step_evolve,
                      total_charge)

UNITS = natural_units()


def free_potential():
    # V0 = 0: the center only fixes where Q_left/Q_right are split
    return PotentialProfile(PotentialKind.SMOOTH_STEP, 0.0, center=1000.0, width=1.0)


def step_run(V0, n_points=5001):
    """Packet with p0 = 0.75 from x0 = -40 against a step of width 0.1 at the origin, up to t = 140."""
    grid = Grid1D(-100.0, 150.0, n_points)
    spec = WavepacketSpec(-40.0, 6.0, 0.75)
    V = PotentialProfile(PotentialKind.SMOOTH_STEP, V0, center=0.0, width=0.1)
    return run_simulation(spec, V, grid, 140.0, 0.02, 500, UNITS)


class TestPotentialProfile(unittest.TestCase):

    def test_sharp_step_is_regularized_on_the_grid(self):
        grid = Grid1D(-1.0, 1.0, 201)
        sharp = PotentialProfile(PotentialKind.SHARP_STEP, 3.0)
        regular = sharp.regularized(grid)
        self.assertEqual(regular.kind, PotentialKind.SMOOTH_STEP)
        self.assertAlmostEqual(regular.width, 2.0 * grid.dx)
        samples = sharp.sample(grid)
        self.assertAlmostEqual(samples[100], 1.5)
        self.assertAlmostEqual(samples[0], 0.0, places=10)
        self.assertAlmostEqual(samples[-1], 3.0, places=10)

    def test_smooth_step_needs_width(self):
        with self.assertRaisesRegex(PreconditionError, "width > 0"):
            PotentialProfile(PotentialKind.SMOOTH_STEP, 3.0)

    def test_sharp_evaluate(self):
        V = PotentialProfile(PotentialKind.SHARP_STEP, 2.0, center=1.0)
        np.testing.assert_array_equal(V.evaluate([0.0, 1.0, 2.0]), [0.0, 2.0, 2.0])


class TestInitialWavepacket(unittest.TestCase):

    def setUp(self):
        self.grid = Grid1D(-60.0, 60.0, 2049)
        self.spec = WavepacketSpec(x0=0.0, sigma=5.0, p0=0.75)

    def test_positive_energy_content(self):
        """phi dominates everywhere the packet lives; the packet carries positive charge."""
        field = build_initial_wavepacket(self.spec, self.grid, UNITS)
        self.assertLess(chi_phi_ratio(field), 1.0)
        self.assertAlmostEqual(chi_phi_ratio(field), 1.0 / 81.0, delta=2e-3)
        self.assertEqual(field.master, "phi")
        self.assertGreater(total_charge(charge_density(field), self.grid), 0.0)
        self.assertAlmostEqual(charge_centroid(field), 0.0, places=6)

    def test_preconditions(self):
        with self.assertRaisesRegex(PreconditionError, "under-resolves the packet"):
            build_initial_wavepacket(WavepacketSpec(0.0, 0.2, 0.75), self.grid, UNITS)
        with self.assertRaisesRegex(PreconditionError, "under-resolves the carrier"):
            build_initial_wavepacket(WavepacketSpec(0.0, 5.0, 10.0), self.grid, UNITS)
        with self.assertRaisesRegex(PreconditionError, "does not fit"):
            build_initial_wavepacket(WavepacketSpec(45.0, 5.0, 0.75), self.grid, UNITS)
        step = PotentialProfile(PotentialKind.SMOOTH_STEP, 3.0, center=10.0, width=0.5)
        with self.assertRaisesRegex(PreconditionError, "overlaps the step"):
            build_initial_wavepacket(self.spec, self.grid, UNITS, potential=step)

    def test_poor_momentum_resolution_warns(self):
        with self.assertLogs("klein_fv.evolution", level="WARNING") as logs:
            build_initial_wavepacket(WavepacketSpec(0.0, 2.0, 0.75), self.grid, UNITS)
        self.assertIn("poor momentum resolution", logs.output[0])

    def test_initial_charge(self):
        """Q(0) = sigma sqrt(2 pi) E(p0)/mc^2 for a unit-amplitude packet."""
        grid = Grid1D(-100.0, 100.0, 4096)
        field = build_initial_wavepacket(WavepacketSpec(0.0, 10.0, 0.75), grid, UNITS)
        expected = 10.0 * np.sqrt(2.0 * np.pi) * float(energy_from_momentum(0.75, UNITS)) / UNITS.rest_energy
        self.assertAlmostEqual(total_charge(charge_density(field), grid), expected, delta=0.02 * expected)

    def test_packet_at_rest(self):
        """p0 = 0 and a broad packet: psi_dot -> -(i mc^2/hbar) psi and chi vanishes."""
        grid = Grid1D(-300.0, 300.0, 2049)
        with self.assertLogs("klein_fv.evolution", level="WARNING"):
            field = build_initial_wavepacket(WavepacketSpec(0.0, 40.0, 0.0), grid, UNITS)
        state = recompose(field, 0.0, UNITS)
        scale = np.max(np.abs(state.psi))
        np.testing.assert_allclose(state.psi_dot, -1j * UNITS.rest_energy * state.psi, rtol=0, atol=1e-3 * scale)
        self.assertLess(chi_phi_ratio(field), 1e-6)

    def test_invalid_spec(self):
        with self.assertRaises(PreconditionError):
            WavepacketSpec(0.0, 0.0, 1.0)


class TestCrankNicolson(unittest.TestCase):

    def setUp(self):
        self.grid = Grid1D(-30.0, 30.0, 601)
        self.field = build_initial_wavepacket(WavepacketSpec(0.0, 3.0, 1.0), self.grid, UNITS)

    def test_stability_bound(self):
        zeros = np.zeros(self.grid.n_points)
        dt_max = max_stable_dt(self.grid, zeros, UNITS)
        self.assertAlmostEqual(dt_max, 2.0 / np.sqrt((2.0 / self.grid.dx) ** 2 + 1.0))
        self.assertLess(max_stable_dt(self.grid, np.full(self.grid.n_points, 3.0), UNITS), dt_max)
        with self.assertRaises(StabilityError) as ctx:
            CrankNicolsonPropagator(self.grid, zeros, 2.0 * dt_max, UNITS)
        self.assertAlmostEqual(ctx.exception.dt_max, dt_max)

    def test_single_step_conserves_charge(self):
        V = PotentialProfile(PotentialKind.SMOOTH_STEP, 3.0, center=20.0, width=0.5)
        before = total_charge(charge_density(self.field), self.grid)
        after = total_charge(charge_density(step_evolve(self.field, V, 0.05, UNITS)), self.grid)
        self.assertAlmostEqual(after, before, delta=1e-12 * before)

    def test_zero_field_stays_zero(self):
        V = PotentialProfile(PotentialKind.SMOOTH_STEP, 3.0, center=20.0, width=0.5)
        out = step_evolve(FVField.zeros(self.grid), V, 0.05, UNITS)
        np.testing.assert_array_equal(out.phi, 0.0)
        np.testing.assert_array_equal(out.chi, 0.0)

    def test_second_order_in_time(self):
        """Errors against the Fourier-exact oracle drop about 4x per halving of dt."""
        t_final = 2.0
        exact = free_evolution_exact(self.field, t_final, UNITS)
        zeros = np.zeros(self.grid.n_points)
        errors = []
        for dt in (0.04, 0.02, 0.01):
            propagator = CrankNicolsonPropagator(self.grid, zeros, dt, UNITS)
            current = self.field
            for k in range(int(round(t_final / dt))):
                current = propagator.step(current, step_index=k)
            errors.append(max(np.max(np.abs(current.phi - exact.phi)), np.max(np.abs(current.chi - exact.chi))))
        for coarse, fine in zip(errors, errors[1:]):
            self.assertGreater(coarse / fine, 3.5)
            self.assertLess(coarse / fine, 4.5)

    def test_grid_mismatch(self):
        propagator = CrankNicolsonPropagator(Grid1D(-30.0, 30.0, 301), np.zeros(301), 0.05, UNITS)
        with self.assertRaises(PreconditionError):
            propagator.step(self.field)

    def test_absorbing_mask(self):
        mask = absorbing_mask(self.grid)
        self.assertLess(mask[0], 0.02)
        self.assertLess(mask[-1], 0.02)
        self.assertLess(mask[0], mask[5])
        self.assertTrue(np.all(mask[self.grid.n_points // 2 - 200:self.grid.n_points // 2 + 200] == 1.0))
        propagator = CrankNicolsonPropagator(self.grid, np.zeros(self.grid.n_points), 0.05, UNITS, absorbing=True)
        self.assertTrue(propagator.absorbing)


class TestRunSimulation(unittest.TestCase):

    def setUp(self):
        self.grid = Grid1D(-30.0, 30.0, 601)
        self.spec = WavepacketSpec(-5.0, 2.0, 1.5)

    def test_zero_final_time(self):
        record = run_simulation(self.spec, free_potential(), self.grid, 0.0, 0.05, 1, UNITS)
        self.assertEqual(len(record.times), 1)
        self.assertEqual(record.charge_drift(), 0.0)

    def test_unstable_dt_is_refused(self):
        with self.assertRaises(StabilityError):
            run_simulation(self.spec, free_potential(), self.grid, 1.0, 1.0, 1, UNITS)

    def test_cadence(self):
        """Records every 4 steps plus the final step; snapshots every 5 steps."""
        record = run_simulation(self.spec, free_potential(), self.grid, 0.5, 0.05, 4, UNITS, snapshot_every=5)
        np.testing.assert_allclose(record.times, [0.0, 0.2, 0.4, 0.5])
        self.assertEqual(len(record.snapshots), 3)
        np.testing.assert_allclose(record.snapshot_times, [0.0, 0.25, 0.5])
        np.testing.assert_allclose(record.Q_left + record.Q_right, record.Q_total, rtol=1e-12)

    def test_bad_arguments(self):
        with self.assertRaises(PreconditionError):
            run_simulation(self.spec, free_potential(), self.grid, 1.0, 0.05, 0, UNITS)
        with self.assertRaises(PreconditionError):
            run_simulation(self.spec, free_potential(), self.grid, -1.0, 0.05, 1, UNITS)


class TestBenchmarks(unittest.TestCase):
    """Longer runs on grids coarse enough for the test suite but converged for these checks."""

    def test_free_packet_group_velocity(self):
        """p0 = 0.75 moves at 0.6 within 1%; charge drift stays below 1e-6 over t = 40."""
        grid = Grid1D(-100.0, 100.0, 4096)
        spec = WavepacketSpec(-30.0, 10.0, 0.75)
        record = run_simulation(spec, free_potential(), grid, 40.0, 0.04, 100, UNITS, snapshot_every=1000)
        start, end = record.snapshots[0], record.snapshots[-1]
        velocity = (charge_centroid(end) - charge_centroid(start)) / record.snapshot_times[-1]
        self.assertAlmostEqual(velocity, 0.6, delta=0.006)
        self.assertLess(record.charge_drift(), 1e-6)

        oracle = free_evolution_exact(start, record.snapshot_times[-1], UNITS)
        self.assertAlmostEqual(charge_centroid(oracle), charge_centroid(end), delta=0.05)

    def test_speed_stays_below_c(self):
        """Measured centroid speed is below c and tracks p0 c^2/E at low, moderate and high momentum."""
        grid = Grid1D(-100.0, 100.0, 4096)
        for p0 in (0.25, 0.75, 2.0):
            record = run_simulation(WavepacketSpec(-30.0, 12.0, p0), free_potential(), grid, 20.0, 0.04, 100,
                                    UNITS, snapshot_every=500)
            start, end = record.snapshots[0], record.snapshots[-1]
            velocity = (charge_centroid(end) - charge_centroid(start)) / record.snapshot_times[-1]
            self.assertLess(velocity, UNITS.c, msg=f"p0={p0}")
            self.assertAlmostEqual(velocity, float(group_velocity(p0, UNITS)), delta=0.02 * velocity, msg=f"p0={p0}")

    def test_klein_packet(self):
        """Transmitted charge turns negative and the reflected charge exceeds the incident charge."""
        record = step_run(3.0)
        q0 = record.Q_total[0]
        self.assertLess(record.charge_drift(), 1e-6)
        self.assertLess(record.Q_right[-1], -0.05 * q0)
        self.assertGreater(record.Q_left[-1], 1.02 * q0)

    def test_evanescent_packet(self):
        record = step_run(1.0)
        self.assertLess(record.charge_drift(), 1e-6)
        self.assertLess(abs(record.Q_right[-1]), 1e-3 * record.Q_total[0])

    def test_packet_crosses_a_flat_potential(self):
        record = step_run(0.0)
        self.assertLess(record.charge_drift(), 1e-6)
        self.assertLess(abs(record.Q_left[-1]) / record.Q_total[0], 1e-3)


class TestTransmissionBenchmark(unittest.TestCase):
    """Packet over a low step (V0 = 0.1) on the benchmark grid and on one with half the spacing."""

    @classmethod
    def setUpClass(cls):
        cls.record = step_run(0.1)

    def test_transmitted_charge_matches_plane_wave(self):
        q0 = self.record.Q_total[0]
        T = solve_step(1.25, 0.1, UNITS).T
        self.assertLess(self.record.charge_drift(), 1e-6)
        self.assertGreater(self.record.Q_right[-1], 0.0)
        self.assertAlmostEqual(self.record.Q_right[-1] / q0, T, delta=0.1 * T)

    def test_spatial_refinement(self):
        fine = step_run(0.1, n_points=10001)
        coarse_right = self.record.Q_right[-1]
        self.assertLess(abs(fine.Q_right[-1] - coarse_right), 0.01 * abs(coarse_right))


if __name__ == '__main__':
    unittest.main()
