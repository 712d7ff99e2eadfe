"""
The five workflows behind the command line, registered in COMMAND_TYPE_MAP.
"""

import logging
from pathlib import Path
from typing import Dict, List

import numpy as np

from klein_fv.core import Grid1D
from klein_fv.epr import (PairRelation, TwoParticleGrid, apply_conjugate_operators,
                          apply_standard_operators, build_epr_pair, commutator_convergence,
                          commutator_residual, extrapolated_commutator_residual,
                          gaussian_test_functions, momentum, position, spacetime_inversion)
from klein_fv.errors import ConfigError
from klein_fv.evolution import (PotentialKind, PotentialProfile, WavepacketSpec,
                                build_initial_wavepacket, run_simulation)
from klein_fv.fv import (KGState, charge_density, charge_density_from_state, chi_phi_ratio,
                         decompose, recompose, total_charge)
from klein_fv.scattering import Regime, plane_wave_densities, solve_step, sweep_reflectivity

from .command import Command, CommandResult
from .output import (SWEEP_HEADER, TIMESERIES_HEADER, format_number, rounded, write_json,
                     write_snapshot, write_table)
from .parameter import at_least, non_negative, one_of, positive

logger = logging.getLogger(__name__)


class ScatterCommand(Command):
    """Plane-wave scattering off the step for one (E, V0)."""

    name = "scatter"
    section = "scatter"

    def _setup_parameters(self):
        self.add_parameter("E", float, required=True)
        self.add_parameter("V0", float, required=True)
        self.add_parameter("amplitude", float, 1.0, validators=[positive])
        self.add_parameter("tol", float, 1e-12, validators=[positive])

    def process(self, out_dir: Path) -> CommandResult:
        E, V0 = self.get_parameter("E"), self.get_parameter("V0")
        tol = self.get_parameter("tol")
        sol = solve_step(E, V0, self.units)
        densities = plane_wave_densities(sol, self.get_parameter("amplitude"), self.units)

        record = {
            "E": sol.E, "V0": sol.V0, "p": sol.p,
            "p_prime_re": sol.p_prime.real, "p_prime_im": sol.p_prime.imag,
            "b_over_a_re": sol.b_over_a.real, "b_over_a_im": sol.b_over_a.imag,
            "bprime_over_a_re": sol.bprime_over_a.real, "bprime_over_a_im": sol.bprime_over_a.imag,
            "R": sol.R, "T": sol.T, "regime": sol.regime.value,
            "rho_i": densities.rho_i, "j_i": densities.j_i,
            "rho_r": densities.rho_r, "j_r": densities.j_r,
            "rho_t": densities.rho_t, "j_t": densities.j_t,
            "flux_residual": densities.flux_residual,
        }
        checks = sol.invariant_checks(tol)
        flux_scale = max(1.0, abs(densities.j_i), abs(densities.j_r), abs(densities.j_t))
        checks["flux_balance"] = abs(densities.flux_residual) <= tol * flux_scale

        path = write_json(out_dir / "scatter.json", record)
        report = "\n".join(f"{key:>18} = {value if isinstance(value, str) else format_number(value)}"
                           for key, value in record.items())
        return CommandResult(checks=checks, summary={"regime": sol.regime.value, "R": sol.R},
                             outputs=[path], report=report)


class SweepCommand(Command):
    """Reflectivity over an evenly spaced range of step heights."""

    name = "sweep"
    section = "sweep"

    def _setup_parameters(self):
        self.add_parameter("E", float, required=True)
        self.add_parameter("V0_min", float, required=True)
        self.add_parameter("V0_max", float, required=True)
        self.add_parameter("steps", int, required=True, validators=[at_least(1)])
        self.add_parameter("tol", float, 1e-12, validators=[positive])

    def _validate(self):
        if self.get_parameter("V0_min") > self.get_parameter("V0_max"):
            raise ConfigError(
                f"sweep.V0_min={self.get_parameter('V0_min')!r} is above sweep.V0_max={self.get_parameter('V0_max')!r}.")

    def process(self, out_dir: Path) -> CommandResult:
        tol = self.get_parameter("tol")
        V0_values = np.linspace(self.get_parameter("V0_min"), self.get_parameter("V0_max"),
                                self.get_parameter("steps"))
        rows = sweep_reflectivity(self.get_parameter("E"), V0_values, self.units)

        unitarity, dichotomy = True, True
        for row in rows:
            if not row.ok:
                continue
            unitarity &= abs(row.R + row.T - 1.0) <= tol * max(1.0, row.R)
            if row.regime is Regime.TRANSMISSION:
                dichotomy &= row.R < 1.0
            elif row.regime is Regime.KLEIN_ZONE:
                dichotomy &= row.R > 1.0
            else:
                dichotomy &= abs(row.R - 1.0) <= tol

        path = write_table(out_dir / "sweep.csv", SWEEP_HEADER,
                           [(row.V0, row.R, row.T, row.regime.value if row.regime else "", row.error or "")
                            for row in rows])
        failed = sum(1 for row in rows if not row.ok)
        report_lines = [",".join(SWEEP_HEADER)]
        report_lines += [f"{format_number(row.V0)},{'' if row.R is None else format_number(row.R)},"
                         f"{'' if row.T is None else format_number(row.T)},{row.regime.value},{row.error or ''}"
                         for row in rows]
        return CommandResult(
            checks={"R_plus_T_is_one": bool(unitarity), "regime_dichotomy": bool(dichotomy)},
            summary={"rows": len(rows), "failed_rows": failed,
                     "regimes": [row.regime.value for row in rows]},
            outputs=[path], report="\n".join(report_lines))


def _grid_parameters(command: Command, x_min: float, x_max: float, n_points: int) -> None:
    command.add_parameter("x_min", float, x_min)
    command.add_parameter("x_max", float, x_max)
    command.add_parameter("n_points", int, n_points, validators=[at_least(3)])


def _packet_parameters(command: Command, x0: float, sigma: float, p0: float) -> None:
    command.add_parameter("x0", float, x0)
    command.add_parameter("sigma", float, sigma, validators=[positive])
    command.add_parameter("p0", float, p0)
    command.add_parameter("amplitude", float, 1.0, validators=[positive])


def _validate_grid(command: Command) -> None:
    if not command.get_parameter("x_min") < command.get_parameter("x_max"):
        raise ConfigError(f"{command.section}.x_min must be below {command.section}.x_max.")


def _grid(command: Command) -> Grid1D:
    return Grid1D(command.get_parameter("x_min"), command.get_parameter("x_max"),
                  command.get_parameter("n_points"))


def _packet(command: Command) -> WavepacketSpec:
    return WavepacketSpec(command.get_parameter("x0"), command.get_parameter("sigma"),
                          command.get_parameter("p0"), command.get_parameter("amplitude"))


class EvolveCommand(Command):
    """
    Wavepacket against a step, with the charge budget recorded over time.

    Defaults are the Klein benchmark: a packet of mean energy 1.25 hitting a
    step of height 3 in natural units.
    """

    name = "evolve"
    section = "evolve"
    flag_overrides = {"snapshots": "snapshot_every"}

    def _setup_parameters(self):
        _grid_parameters(self, -250.0, 250.0, 10001)
        _packet_parameters(self, -60.0, 10.0, 0.75)
        self.add_parameter("potential", str, PotentialKind.SMOOTH_STEP.value,
                           validators=[one_of([kind.value for kind in PotentialKind])])
        self.add_parameter("V0", float, 3.0)
        self.add_parameter("center", float, 0.0)
        self.add_parameter("width", float, 0.1, validators=[positive], allow_none=True)
        self.add_parameter("dt", float, 0.02, validators=[positive])
        self.add_parameter("t_final", float, 200.0, validators=[non_negative])
        self.add_parameter("record_every", int, 50, validators=[at_least(1)])
        self.add_parameter("snapshot_every", int, 0, validators=[non_negative])
        self.add_parameter("absorbing", bool, False)
        self.add_parameter("drift_tol", float, 1e-6, validators=[positive])

    def _validate(self):
        _validate_grid(self)
        if self.get_parameter("potential") == PotentialKind.SMOOTH_STEP.value and self.get_parameter("width") is None:
            raise ConfigError("evolve.width is required for a smooth_step potential.")

    def process(self, out_dir: Path) -> CommandResult:
        potential = PotentialProfile(PotentialKind(self.get_parameter("potential")), self.get_parameter("V0"),
                                     self.get_parameter("center"), self.get_parameter("width"))
        snapshot_every = self.get_parameter("snapshot_every") or None
        record = run_simulation(_packet(self), potential, _grid(self), self.get_parameter("t_final"),
                                self.get_parameter("dt"), self.get_parameter("record_every"), self.units,
                                snapshot_every=snapshot_every, absorbing=self.get_parameter("absorbing"))

        rows = zip(record.times, record.Q_total, record.Q_left, record.Q_right, record.max_abs_psi)
        outputs = [write_table(out_dir / "timeseries.csv", TIMESERIES_HEADER, rows)]
        for index, snapshot in enumerate(record.snapshots):
            outputs.append(write_snapshot(out_dir / "snapshots" / f"snapshot_{index:04d}.csv", snapshot))

        drift = record.charge_drift()
        q0 = float(record.Q_total[0])
        summary = {
            "steps_recorded": len(record.times),
            "t_final": float(record.times[-1]),
            "Q_total_initial": q0,
            "Q_total_drift": drift,
            "Q_left_final": float(record.Q_left[-1]),
            "Q_right_final": float(record.Q_right[-1]),
            "snapshots": len(record.snapshots),
        }
        checks = {}
        if not self.get_parameter("absorbing"):
            checks["charge_conserved"] = drift < self.get_parameter("drift_tol")
        report = "\n".join(f"{key:>16} = {value if isinstance(value, int) else format_number(value)}"
                           for key, value in summary.items())
        return CommandResult(checks=checks, summary=summary, outputs=outputs, report=report)


class DecomposeCommand(Command):
    """
    Builds a positive-energy packet, splits it into (phi, chi) and writes the snapshot.

    Also runs a seeded round-trip check on random states and bounded random potentials.
    """

    name = "decompose"
    section = "decompose"
    flag_overrides = {"seed": "seed"}

    def _setup_parameters(self):
        _grid_parameters(self, -60.0, 60.0, 2049)
        _packet_parameters(self, 0.0, 5.0, 0.75)
        self.add_parameter("seed", int, 0, validators=[non_negative])
        self.add_parameter("samples", int, 100, validators=[at_least(1)])
        self.add_parameter("sample_points", int, 64, validators=[at_least(3)])
        self.add_parameter("V_max", float, 2.0, validators=[non_negative])
        self.add_parameter("tol", float, 1e-12, validators=[positive])

    def _validate(self):
        _validate_grid(self)

    def process(self, out_dir: Path) -> CommandResult:
        field = build_initial_wavepacket(_packet(self), _grid(self), self.units)
        ratio = chi_phi_ratio(field)
        round_trip, density_gap = self._random_round_trips()
        tol = self.get_parameter("tol")

        summary = {
            "chi_phi_ratio": ratio,
            "master": field.master,
            "total_charge": total_charge(charge_density(field), field.grid),
            "round_trip_error": round_trip,
            "density_forms_gap": density_gap,
        }
        checks = {
            "positive_energy_packet": ratio < 1.0 and field.master == "phi",
            "round_trip": round_trip <= tol,
            "density_forms_agree": density_gap <= tol,
        }
        path = write_snapshot(out_dir / "decompose_snapshot.csv", field)
        report = "\n".join(f"{key:>18} = {value if isinstance(value, str) else format_number(value)}"
                           for key, value in summary.items())
        return CommandResult(checks=checks, summary=summary, outputs=[path], report=report)

    def _random_round_trips(self):
        """Worst relative errors of decompose/recompose and of the two charge-density forms."""
        rng = np.random.default_rng(self.get_parameter("seed"))
        grid = Grid1D(-1.0, 1.0, self.get_parameter("sample_points"))
        v_max = self.get_parameter("V_max")
        hbar, mc2 = self.units.hbar, self.units.rest_energy
        worst_trip, worst_density = 0.0, 0.0
        for _ in range(self.get_parameter("samples")):
            n = grid.n_points
            psi = rng.normal(size=n) + 1j * rng.normal(size=n)
            psi_dot = (mc2 / hbar) * (rng.normal(size=n) + 1j * rng.normal(size=n))
            V = rng.uniform(-v_max, v_max, size=n)
            state = KGState(psi, psi_dot, grid)
            field = decompose(state, V, self.units)
            back = recompose(field, V, self.units)

            amp = max(np.max(np.abs(psi)), np.max(np.abs(field.phi)), np.max(np.abs(field.chi)))
            rate = np.max(np.abs(psi_dot)) + (mc2 + v_max) * amp / hbar
            worst_trip = max(worst_trip,
                             np.max(np.abs(back.psi - psi)) / amp,
                             np.max(np.abs(back.psi_dot - psi_dot)) / rate)

            gap = np.max(np.abs(charge_density(field) - charge_density_from_state(state, V, self.units)))
            worst_density = max(worst_density, gap / (amp ** 2 * (1.0 + v_max / mc2) + amp * rate * hbar / mc2))
        return float(worst_trip), float(worst_density)


class EprDemoCommand(Command):
    """Commutator residuals, the EPR pair's label/observed table and the inversion checks."""

    name = "epr-demo"
    section = "epr_demo"
    flag_overrides = {"refine": "refine"}

    def _setup_parameters(self):
        self.add_parameter("p1", float, 0.75)
        self.add_parameter("relation", str, PairRelation.OPPOSITE_MOMENTA_FIXED_SEPARATION.value,
                           validators=[one_of([relation.value for relation in PairRelation])])
        _grid_parameters(self, -8.0, 8.0, 2048)
        self.add_parameter("refine", int, 0, validators=[non_negative])
        self.add_parameter("refine_points", int, 129, validators=[at_least(3)])
        self.add_parameter("tol", float, 1e-6, validators=[positive])

    def _validate(self):
        _validate_grid(self)

    def process(self, out_dir: Path) -> CommandResult:
        units = self.units
        tol = self.get_parameter("tol")
        pair = build_epr_pair(self.get_parameter("p1"), units, PairRelation(self.get_parameter("relation")))
        grid = _grid(self)
        two = TwoParticleGrid.square(grid)

        relative = (position(1) - position(2), momentum(1) + momentum(2))
        centre = (position(1) + position(2), momentum(1) - momentum(2))
        functions = gaussian_test_functions(two)
        commutators = {
            "x1_minus_x2__p1_plus_p2": commutator_residual(*relative, functions, units),
            "x1_plus_x2__p1_minus_p2": commutator_residual(*centre, functions, units),
            "x1__p1": commutator_residual(position(1), momentum(1), functions, units),
        }
        extrapolated = {
            "x1_minus_x2__p1_plus_p2": extrapolated_commutator_residual(*relative, two, units),
            "x1_plus_x2__p1_minus_p2": extrapolated_commutator_residual(*centre, two, units),
        }

        p_obs1, e_obs1 = apply_standard_operators(pair.wave1, units)
        p_obs2, e_obs2 = apply_conjugate_operators(pair.wave2, units)
        table = [
            {"member": "particle", "label_p": pair.wave1.label_momentum.real, "label_E": pair.wave1.label_energy,
             "observed_p": complex(p_obs1).real, "observed_E": e_obs1},
            {"member": "antiparticle", "label_p": pair.wave2.label_momentum.real, "label_E": pair.wave2.label_energy,
             "observed_p": complex(p_obs2).real, "observed_E": e_obs2},
        ]

        inverted = spacetime_inversion(pair.wave1)
        packet_grid = Grid1D(-60.0, 60.0, 2049)
        packet = build_initial_wavepacket(WavepacketSpec(0.0, 5.0, 0.75), packet_grid, units)
        twice = spacetime_inversion(spacetime_inversion(packet))
        involution_gap = max(np.max(np.abs(twice.phi - packet.phi)), np.max(np.abs(twice.chi - packet.chi)))

        checks = {
            "relative_commutator_vanishes": extrapolated["x1_minus_x2__p1_plus_p2"] < tol,
            "centre_commutator_vanishes": extrapolated["x1_plus_x2__p1_minus_p2"] < tol,
            "canonical_commutator_control": abs(commutators["x1__p1"] / units.hbar - 1.0) < 1e-3,
            "observed_values_equal": (abs(table[0]["observed_E"] - table[1]["observed_E"]) <= 1e-12 * e_obs1
                                      and self._observed_momenta_match(pair, table)),
            "inversion_flips_kind": (inverted.kind is pair.wave2.kind
                                     and spacetime_inversion(inverted) == pair.wave1),
            "inversion_is_involution": involution_gap <= 1e-12,
        }

        convergence: List = []
        if self.get_parameter("refine"):
            base = TwoParticleGrid.square(Grid1D(grid.x_min, grid.x_max, self.get_parameter("refine_points")))
            convergence = commutator_convergence(*relative, base, self.get_parameter("refine"), units)
            ratios = [coarse / fine for (_, coarse), (_, fine) in zip(convergence, convergence[1:])]
            checks["second_order_convergence"] = all(ratio > 3.5 for ratio in ratios)

        record = {
            "commutator_residuals": commutators,
            "extrapolated_residuals": extrapolated,
            "pair": {"relation": pair.relation.value, "members": table,
                     "separation_rate": pair.separation_rate(units),
                     "total_label_momentum": pair.total_label_momentum().real},
            "inversion": {"involution_gap": float(involution_gap),
                          "packet_master": packet.master,
                          "inverted_master": spacetime_inversion(packet).master},
            "convergence": [{"n_points": n, "residual": r} for n, r in convergence],
            "checks": checks,
        }
        path = write_json(out_dir / "epr_demo.json", record)
        return CommandResult(checks=checks, summary={"extrapolated_residuals": extrapolated},
                             outputs=[path], report=self._report(record))

    @staticmethod
    def _observed_momenta_match(pair, table) -> bool:
        p1, p2 = table[0]["observed_p"], table[1]["observed_p"]
        if pair.relation is PairRelation.OPPOSITE_MOMENTA_FIXED_SEPARATION:
            return abs(p1 - p2) <= 1e-12 * max(1.0, abs(p1))
        return abs(p1 + p2) <= 1e-12 * max(1.0, abs(p1))

    @staticmethod
    def _report(record: Dict) -> str:
        lines = ["Commutator residuals (second-order stencils, extrapolated):"]
        for name, value in record["commutator_residuals"].items():
            extra = record["extrapolated_residuals"].get(name)
            tail = f"  -> {format_number(extra)}" if extra is not None else "  (control)"
            lines.append(f"  [{name}] {format_number(value)}{tail}")
        lines.append(f"EPR pair ({record['pair']['relation']}):")
        lines.append(f"  {'member':<13}{'label p':>14}{'label E':>14}{'observed p':>14}{'observed E':>14}")
        for row in record["pair"]["members"]:
            lines.append(f"  {row['member']:<13}{rounded(row['label_p']):>14g}{rounded(row['label_E']):>14g}"
                         f"{rounded(row['observed_p']):>14g}{rounded(row['observed_E']):>14g}")
        lines.append(f"  separation rate {format_number(record['pair']['separation_rate'])}")
        inversion = record["inversion"]
        lines.append(f"Inversion: involution gap {format_number(inversion['involution_gap'])}, "
                     f"master {inversion['packet_master']} -> {inversion['inverted_master']}")
        for n, residual in ((row["n_points"], row["residual"]) for row in record["convergence"]):
            lines.append(f"  refinement n={n}: {format_number(residual)}")
        lines.append("Checks: " + ", ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in record["checks"].items()))
        return "\n".join(lines)


COMMAND_TYPE_MAP = {
    "scatter": ScatterCommand,
    "sweep": SweepCommand,
    "evolve": EvolveCommand,
    "decompose": DecomposeCommand,
    "epr-demo": EprDemoCommand,
}
