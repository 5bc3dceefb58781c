"""
Acceptance checks shared by the CLI subcommands and the full-suite workflow.

Every check returns a list of Verdicts and writes its data products through the
artifact store. Numerical failures inside a check become failed verdicts.
"""
from functools import cached_property
from typing import Callable, List, Optional

import numpy as np

from app.approx.drivers import CertifiedDriver, make_driver
from app.approx.haar import (
    HAAR_GRID,
    density_approximant,
    gram_matrix,
    haar_coefficients,
    haar_project,
    mollify_project,
    operator_norm_study,
    uniform_convergence_report,
)
from app.pde.mild import SolveReport, fd_residual, solve_linear_phi, solve_semilinear_u, terminal_propagation
from app.pde.parameters import LipschitzDriver, ParamSet, make_generator, rho_norm
from app.pde.reference import solve_reference_fd
from app.pipeline import anchors
from app.pipeline.state import ExperimentConfig, TerminalSection, Verdict
from app.spectral.field import Field, GridSpec, SobolevIndex, TimeField, forward, gaussian_bump, inverse, smooth_taper
from app.spectral.operators import (
    bessel_potential,
    gaussian_sobolev_norm_dense,
    gradient,
    heat_semigroup,
    sobolev_norm,
)
from app.spectral.paraproduct import pointwise_product, product_bound_report
from app.spectral.studies import rough_sample, semigroup_bound_report
from app.stochastic.bsde import (
    assemble_solution,
    classical_equivalence_check,
    feynman_kac_at_points,
    martingale_test,
    second_moment_bound,
    uniqueness_check,
)
from app.stochastic.occupation import (
    a_ww_rough,
    a_ww_smooth,
    chain_rule_residual,
    classical_consistency,
    consistency_rate,
    extension_continuity,
    ito_functional,
    orthogonality_check,
)
from app.stochastic.paths import PathEnsemble, interpolate, sample_ensemble
from app.storage.artifact_store import ArtifactStore
from app.utils.errors import LabError, ParameterRejection
from app.utils.logger import logger

SMOOTH_DRIFTS = ("zero", "smooth_bump")
BESSEL_ORDERS = (-1.0, -0.5, 0.3, 1.0, 2.0)


def verdict(name: str, anchor: str, statistic: float, threshold: float, passed: bool, **details) -> Verdict:
    logger.info(f"{'✅' if passed else '❌'} {name}: {statistic:.4g} (threshold {threshold:.4g})")
    return Verdict(
        name=name,
        anchor=anchor,
        statistic=float(statistic),
        threshold=float(threshold),
        passed=bool(passed),
        details=details,
    )


def build_terminal(section: TerminalSection, grid: GridSpec) -> Field:
    """Terminal condition Phi; polynomial kinds are tapered to vanish before the box edge"""
    if section.kind == "gaussian_bump":
        return gaussian_bump(grid, width=section.width, amplitude=section.amplitude)
    taper = smooth_taper(grid, plateau=0.75 * grid.half_width, width=0.2 * grid.half_width)
    coords = grid.coordinates()
    if section.kind == "tapered_identity":
        values = coords[0]
    else:
        values = np.sum(coords ** 2, axis=0)
    return Field(grid, section.amplitude * values * taper.values[0])


def _coarse(u: TimeField, factor: int) -> TimeField:
    return TimeField(u.grid, u.horizon, u.snapshots[::factor])


class Experiment:
    """Lazily built objects of one experiment, shared between checks"""

    def __init__(self, cfg: ExperimentConfig, store: ArtifactStore):
        self.cfg = cfg
        self.store = store

    @cached_property
    def param(self) -> ParamSet:
        return self.cfg.param_set()

    @property
    def grid(self) -> GridSpec:
        return self.cfg.grid

    @property
    def horizon(self) -> float:
        return self.param.T

    @property
    def steps(self) -> int:
        return self.cfg.time.steps

    @property
    def seed(self) -> Optional[int]:
        return self.cfg.ensemble.seed

    @cached_property
    def driver(self) -> CertifiedDriver:
        return make_driver(self.cfg.drift, self.grid, self.horizon, self.steps, self.param.beta, self.param.q)

    @property
    def b(self) -> TimeField:
        return self.driver.field

    @cached_property
    def generator(self) -> LipschitzDriver:
        return make_generator(self.cfg.generator.name, self.cfg.generator.constant, self.grid.d)

    @cached_property
    def terminal(self) -> Field:
        return build_terminal(self.cfg.terminal, self.grid)

    @cached_property
    def solution(self) -> tuple:
        tol = self.cfg.tolerances
        return solve_semilinear_u(self.driver, self.generator, self.terminal, self.param, tol.picard, tol.max_iter)

    @property
    def u(self) -> TimeField:
        return self.solution[0]

    @property
    def solve_report(self) -> SolveReport:
        return self.solution[1]

    @cached_property
    def ensemble(self) -> PathEnsemble:
        return sample_ensemble(self.cfg.ensemble.paths, self.steps, self.horizon, self.grid.d, self.seed)

    @cached_property
    def fine_ensemble(self) -> PathEnsemble:
        """Few paths on the fine chain-rule grid"""
        paths = self.cfg.ensemble.chain_rule_paths
        return sample_ensemble(paths, self.cfg.time.chain_rule_steps, self.horizon, self.grid.d, self.seed)

    @property
    def small_ensemble(self) -> PathEnsemble:
        return self.ensemble.subset(min(self.cfg.ensemble.orthogonality_paths, self.ensemble.paths))

    @property
    def smooth_drift(self) -> bool:
        return self.cfg.drift.kind in SMOOTH_DRIFTS and self.grid.d == 1


def guarded(name: str, anchor: str, check: Callable[[], List[Verdict]]) -> List[Verdict]:
    """Run a check; a LabError becomes one failed verdict carrying the diagnostic"""
    logger.info(f"🔧 CHECK: {name}")
    try:
        return check()
    except ParameterRejection:
        raise
    except LabError as e:
        logger.error(f"❌ {name} aborted: {e}")
        return [Verdict(name=name, anchor=anchor, passed=False, details={"error": type(e).__name__, "message": str(e)})]


# --- parameters ---------------------------------------------------------------

def check_parameters(exp: Experiment) -> List[Verdict]:
    cfg = exp.cfg
    cases = [("config", cfg.params, "accept", None)]
    cases += [(f"case-{i}", c.params, c.expect, c.code) for i, c in enumerate(cfg.parameter_cases)]
    verdicts, rows = [], []
    for label, block, expect, code in cases:
        try:
            ParamSet(**block.as_mapping())
            accepted, got_code, reason = True, None, "inside K(beta, q)"
        except ParameterRejection as e:
            accepted, got_code, reason = False, e.code, e.reason
        ok = accepted == (expect == "accept") and (code is None or code == got_code)
        rows.append({**block.as_mapping(), "label": label, "accepted": accepted, "code": got_code or "", "reason": reason})
        verdicts.append(
            verdict(
                f"parameters.{label}", anchors.PARAMETER_REGION, float(accepted), float(expect == "accept"), ok,
                code=got_code, reason=reason,
            )
        )
    exp.store.write_table("parameter_cases", rows)
    return verdicts


# --- spectral calculus --------------------------------------------------------

def check_spectral(exp: Experiment) -> List[Verdict]:
    param, grid, studies = exp.param, exp.grid, exp.cfg.studies
    rng = np.random.default_rng(studies.seed)
    w = rough_sample(grid, rng, 0.5)
    scale = w.sup_norm()
    fft = float(np.max(np.abs(inverse(forward(w.values, grid), grid) - w.values))) / scale
    round_trip = max(
        (bessel_potential(bessel_potential(w, s), -s) - w).sup_norm() / scale for s in BESSEL_ORDERS
    )
    law = float(np.max(np.abs((heat_semigroup(heat_semigroup(w, 0.1), 0.2) - heat_semigroup(w, 0.3)).values)))
    grad_scale = gradient(w).sup_norm()
    commutation = max(
        (gradient(heat_semigroup(w, t)) - heat_semigroup(gradient(w), t)).sup_norm() / grad_scale for t in (0.1, 0.5)
    )
    drop = 0.0
    for r in (2.0, 2.5, 3.0):
        norms = np.array([sobolev_norm(w, SobolevIndex(s=s, r=r)) for s in sorted(BESSEL_ORDERS)])
        drop = max(drop, float(np.max(np.maximum(norms[:-1] - norms[1:], 0.0) / norms[:-1])))
    line = grid if grid.d == 1 else GridSpec(d=1, n=grid.n, half_width=grid.half_width)
    oracle_index = SobolevIndex(s=-0.3, r=3.0)
    oracle = gaussian_sobolev_norm_dense(1.0, oracle_index, line.half_width)
    quadrature = abs(sobolev_norm(gaussian_bump(line), oracle_index) - oracle) / oracle
    out = [
        verdict("spectral.fft-round-trip", anchors.SPECTRAL_ROUND_TRIP, fft, 1e-10, fft <= 1e-10),
        verdict("spectral.round-trip", anchors.SPECTRAL_ROUND_TRIP, round_trip, 1e-10, round_trip <= 1e-10,
                orders=list(BESSEL_ORDERS)),
        verdict("spectral.semigroup-law", anchors.SEMIGROUP_LAW, law, 1e-10, law <= 1e-10),
        verdict("spectral.gradient-commutation", anchors.HEAT_GRADIENT_COMMUTATION, commutation, 1e-10,
                commutation <= 1e-10),
        verdict("spectral.norm-monotonicity", anchors.SOBOLEV_MONOTONICITY, drop, 1e-10, drop <= 1e-10),
        verdict("spectral.quadrature-oracle", anchors.SOBOLEV_QUADRATURE, quadrature, 1e-6, quadrature <= 1e-6,
                oracle=oracle),
    ]

    index = param.solution_index
    contraction = semigroup_bound_report(
        index, index, [0.01, 0.1, 0.5], studies.samples, studies.seed, grid, variant="contraction"
    )
    out.append(
        verdict("spectral.contraction", anchors.SEMIGROUP_CONTRACTION, contraction.constant, 1.0 + 1e-8,
                contraction.constant <= 1.0 + 1e-8)
    )

    t_values = np.geomspace(0.002, 0.02, 5).tolist()
    constants = []
    report = None
    for n in studies.refinement_points:
        study = semigroup_bound_report(
            param.forcing_index, index, t_values, studies.samples, studies.seed, grid.refined(n), smoothness_margin=0.0
        )
        constants.append(study.constant)
        if n == grid.n or report is None:
            report = study
    deviation = abs(report.slope - report.expected_slope) / abs(report.expected_slope)
    spread = max(constants) / min(constants)
    exp.store.write_table(
        "semigroup_mapping",
        [{"t": t, "max_ratio": r, "mean_norm": m} for t, r, m in zip(t_values, report.max_ratio_by_t, report.mean_norm_by_t)],
    )
    out.append(
        verdict("spectral.mapping-exponent", anchors.SEMIGROUP_MAPPING, deviation, exp.cfg.tolerances.slope_relative,
                deviation <= exp.cfg.tolerances.slope_relative, slope=report.slope, expected=report.expected_slope)
    )
    out.append(
        verdict("spectral.mapping-constant", anchors.SEMIGROUP_MAPPING, spread, 2.0, spread <= 2.0,
                points=studies.refinement_points, constants=constants)
    )
    return out


# --- pointwise product --------------------------------------------------------

def check_product(exp: Experiment) -> List[Verdict]:
    grid, param, studies = exp.grid, exp.param, exp.cfg.studies
    g = gaussian_bump(grid, width=1.0)
    h = Field(grid, np.cos(grid.coordinates()[0]) * smooth_taper(grid).values[0])
    product, report = pointwise_product(g, h)
    error = float(np.max(np.abs(product.values - g.values * h.values)))
    exp.store.write_table("product_tail", report.rows())
    out = [verdict("product.smooth-agreement", anchors.POINTWISE_PRODUCT, error, 1e-8, error <= 1e-8)]

    constants = []
    for n in studies.refinement_points:
        constants.append(product_bound_report(param, studies.samples, studies.seed, grid.refined(n)).constant)
    spread = max(constants) / min(constants)
    out.append(
        verdict("product.bound-stability", anchors.PRODUCT_BOUND, spread, 2.0,
                bool(np.isfinite(spread)) and spread <= 2.0, points=studies.refinement_points, constants=constants)
    )
    return out


# --- drift --------------------------------------------------------------------

def check_drift(exp: Experiment) -> List[Verdict]:
    certificate = exp.driver.certificate
    exp.store.write_time_field("drift", exp.b, certificate)
    return [
        verdict("drift.certificate", anchors.DRIFT_REGULARITY, certificate.refinement_change, 0.1,
                certificate.admissible, sup_norm=certificate.sup_norm, reason=certificate.reason)
    ]


# --- PDE ----------------------------------------------------------------------

def check_linear_pde(exp: Experiment) -> List[Verdict]:
    grid, horizon, steps = exp.grid, exp.horizon, exp.steps
    c = 1.5
    constant = TimeField.constant_in_time(Field.constant(grid, c), horizon, steps)
    phi = solve_linear_phi(constant)
    expected = -c * (horizon - phi.times)
    error_constant = float(np.max(np.abs(phi.snapshots - expected[:, None, None])))

    k = 4
    xi = np.pi * k / grid.half_width
    mode = Field(grid, np.cos(xi * grid.coordinates()[0]))
    phi_mode = solve_linear_phi(TimeField.constant_in_time(mode, horizon, steps))
    weights = -(1.0 - np.exp(-(horizon - phi_mode.times) * xi ** 2 / 2.0)) * 2.0 / xi ** 2
    error_mode = float(np.max(np.abs(phi_mode.snapshots - weights[:, None, None] * mode.values[None])))

    bump = gaussian_bump(grid)
    smooth = TimeField.from_function(grid, horizon, steps, lambda t, x: (1.0 + t) * bump.values[0])
    residual = fd_residual(solve_linear_phi(smooth), smooth)
    return [
        verdict("pde.linear-constant", anchors.LINEAR_MILD, error_constant, 1e-10, error_constant <= 1e-10),
        verdict("pde.linear-mode", anchors.LINEAR_MILD, error_mode, 1e-8, error_mode <= 1e-8),
        verdict("pde.linear-fd-residual", anchors.LINEAR_MILD, residual, 1e-6, residual <= 1e-6),
    ]


def check_semilinear_pde(exp: Experiment) -> List[Verdict]:
    tol = exp.cfg.tolerances
    u, report = exp.solution
    index = exp.param.solution_index
    exp.store.write_json("solve_report", report)
    exp.store.write_table(
        "picard_increments",
        [{"iteration": i + 1, "weighted": w, "plain": p} for i, (w, p) in enumerate(zip(report.increments, report.plain_increments))],
    )
    exp.store.write_time_field("u", u)

    terminal_error = float(np.max(np.abs(u.at(u.steps).values - exp.terminal.values)))
    out = [
        verdict("pde.terminal", anchors.SEMILINEAR_MILD, terminal_error, 0.0, terminal_error == 0.0),
        verdict("pde.contraction", anchors.PICARD_CONTRACTION, report.contraction_factor, 1.0,
                report.contraction_factor < 1.0, predicted=report.predicted_factor, rho=report.rho, c_emp=report.c_emp),
        verdict("pde.fixed-point-residual", anchors.SEMILINEAR_MILD, report.residual, 2.0 * tol.picard,
                report.residual <= 2.0 * tol.picard, iterations=report.iterations),
    ]
    if report.iterations > 0:
        other, _ = solve_semilinear_u(exp.driver, exp.generator, exp.terminal, exp.param, tol.picard, tol.max_iter, initial="zero")
        gap = rho_norm(u - other, 0.0, index)
        out.append(verdict("pde.uniqueness", anchors.PDE_UNIQUENESS, gap, 10.0 * tol.picard, gap <= 10.0 * tol.picard))
    if exp.b.is_zero() and exp.generator.is_zero:
        free = terminal_propagation(exp.terminal, exp.horizon, exp.steps)
        gap = float(np.max(np.abs(u.at(0).values - free.at(0).values)))
        out.append(verdict("pde.free-propagation", anchors.SEMILINEAR_MILD, gap, 1e-10, gap <= 1e-10))
    if exp.smooth_drift:
        reference = solve_reference_fd(exp.b, exp.terminal, exp.generator)
        relative = float(np.max(np.abs(u.snapshots - reference.snapshots)) / max(reference.sup_norm(), 1e-300))
        out.append(verdict("pde.fd-oracle", anchors.FD_ORACLE, relative, tol.fd_relative, relative <= tol.fd_relative))
    return out


# --- occupation operators -----------------------------------------------------

def _tapered_identity(grid: GridSpec) -> Field:
    return build_terminal(TerminalSection(kind="tapered_identity"), grid)


def check_chain_rule(exp: Experiment) -> List[Verdict]:
    grid, horizon, tol = exp.grid, exp.horizon, exp.cfg.tolerances
    fine = exp.fine_ensemble
    ensemble = fine.coarsen(exp.cfg.time.chain_rule_steps // exp.steps) if fine.steps > exp.steps else fine
    out = []

    c = 1.5
    constant = TimeField.constant_in_time(Field.constant(grid, c), horizon, ensemble.steps)
    functional = a_ww_rough(constant, ensemble)
    error = float(np.max(np.abs(functional.values[:, :, 0] - c * ensemble.times[None, :])))
    out.append(verdict("chain-rule.constant", anchors.CHAIN_RULE, error, 1e-10, error <= 1e-10))

    identity = _tapered_identity(grid)
    linear = TimeField.constant_in_time(identity, horizon, fine.steps)
    rough = a_ww_rough(linear, fine)
    smooth = a_ww_smooth(lambda t, x: x[0], fine)
    relative = float(rough.sup_distance(smooth).mean() / np.max(np.abs(smooth.values), axis=(1, 2)).mean())
    exp.store.write_path_functional("chain_rule_linear", rough, max_paths=10)
    out.append(verdict("chain-rule.linear-forcing", anchors.CHAIN_RULE, relative, 1e-2, relative <= 1e-2, steps=fine.steps))

    def bump(t, x):
        return np.exp(-0.5 * x[0] ** 2)

    rate = consistency_rate(bump, grid, ensemble)
    out.append(
        verdict("chain-rule.smooth-rate", anchors.CHAIN_RULE, rate.reduction, tol.rate_low,
                tol.rate_low <= rate.reduction <= tol.rate_high, steps=rate.steps, differences=rate.mean_sup_differences)
    )
    residual = chain_rule_residual(bump, grid, ensemble)
    out.append(
        verdict("chain-rule.generator-identity", anchors.CHAIN_RULE, residual.generator_path_residual, 1e-5,
                residual.generator_path_residual <= 1e-5, field_residual=residual.generator_residual)
    )

    forcing = TimeField.from_function(grid, horizon, ensemble.steps, lambda t, x: bump(t, x))
    psi = gaussian_bump(grid)
    shift = a_ww_rough(forcing, ensemble, terminal=psi).sup_distance(a_ww_rough(forcing, ensemble)).mean()
    bound = 5.0 * np.sqrt(ensemble.dt)
    out.append(verdict("chain-rule.terminal-invariance", anchors.CHAIN_RULE, shift, bound, shift <= bound))
    return out


def check_orthogonality(exp: Experiment) -> List[Verdict]:
    ensemble = exp.small_ensemble
    drift = TimeField(exp.grid, exp.horizon, exp.b.snapshots[:, :1])
    functional = a_ww_rough(drift, ensemble)
    out = []
    for kind in ("W", "tanh"):
        report = orthogonality_check(functional, ensemble, kind)
        out.append(verdict(f"orthogonality.{kind}", anchors.ORTHOGONALITY, report.z_max, 3.0, report.passed))
    linear = TimeField.constant_in_time(_tapered_identity(exp.grid), exp.horizon, exp.steps)
    control = orthogonality_check(ito_functional(linear, ensemble), ensemble, "W")
    out.append(
        verdict("orthogonality.negative-control", anchors.ORTHOGONALITY, control.z_max, 3.0, not control.passed,
                means=control.means)
    )
    return out


def check_consistency(exp: Experiment) -> List[Verdict]:
    grid, tol = exp.grid, exp.cfg.tolerances
    ensemble = exp.small_ensemble
    out = []
    constant = classical_consistency(lambda t, x: np.full(x.shape[1:], 2.0), grid, ensemble)
    out.append(
        verdict("consistency.constant", anchors.CLASSICAL_CONSISTENCY, constant.max_sup_difference, 1e-10,
                constant.max_sup_difference <= 1e-10)
    )

    def bounded(t, x):
        return np.sin(x[0]) * np.exp(-0.25 * x[0] ** 2) * (1.0 + 0.5 * np.cos(t))

    rate = consistency_rate(bounded, grid, ensemble)
    out.append(
        verdict("consistency.rate", anchors.CLASSICAL_CONSISTENCY, rate.reduction, tol.rate_low,
                tol.rate_low <= rate.reduction <= tol.rate_high, differences=rate.mean_sup_differences)
    )

    drift = TimeField(exp.grid, exp.horizon, exp.b.snapshots[:, :1])
    approximants = [drift.map(lambda f, n=n: mollify_project(f, n)) for n in (2, 4, 8, 16)]
    extension = extension_continuity(approximants, drift, ensemble, exp.param.forcing_index)
    exp.store.write_table(
        "extension_continuity",
        [{"level": n, "forcing_distance": d, "mean_sup_difference": m}
         for n, d, m in zip((2, 4, 8, 16), extension.forcing_distances, extension.mean_sup_differences)],
    )
    out.append(
        verdict("consistency.extension", anchors.EXTENSION_CONTINUITY, extension.mean_sup_differences[-1],
                extension.mean_sup_differences[0], extension.decreasing, distances=extension.forcing_distances)
    )
    return out


# --- BSDE ---------------------------------------------------------------------

def check_bsde(exp: Experiment) -> List[Verdict]:
    u, b, f, terminal, ensemble = exp.u, exp.b, exp.generator, exp.terminal, exp.ensemble
    solution = assemble_solution(u, b, f, terminal, ensemble, param=exp.param)
    out = [
        verdict("bsde.terminal", anchors.BSDE_TERMINAL, solution.terminal_error, 1e-10, solution.terminal_error <= 1e-10)
    ]

    half = ensemble.subset(max(2, ensemble.paths // 2))
    constant = solution.identity_constant()
    constant_half = float(solution.identity_gap()[: half.paths].max() / np.sqrt(solution.dt))
    stability = constant / constant_half if constant_half > 0 else 1.0
    out.append(
        verdict("bsde.identity-constant", anchors.BSDE_IDENTITY, stability, 2.0,
                bool(np.isfinite(constant)) and stability <= 2.0, constant=constant, constant_half=constant_half)
    )

    report = martingale_test(solution.M, solution.times, ensemble)
    exp.store.write_json("martingale_test", report)
    out.append(verdict("bsde.martingale", anchors.BSDE_MARTINGALE, report.adaptedness_z, report.adaptedness_threshold,
                       report.passed, terminal_z=report.terminal_z))
    drift_only = np.broadcast_to(solution.times[None, :, None], solution.M.shape)
    control = martingale_test(drift_only, solution.times, ensemble)
    out.append(verdict("bsde.negative-control", anchors.BSDE_MARTINGALE, control.terminal_z, 3.0, not control.passed))

    moment = second_moment_bound(solution, u, exp.grid.d)
    out.append(verdict("bsde.second-moment", anchors.BSDE_SECOND_MOMENT, moment.second_moment, moment.bound, moment.passed))

    uniqueness = uniqueness_check(u, b, f, terminal, exp.small_ensemble if ensemble.paths > 10000 else ensemble)
    exp.store.write_json("uniqueness_check", uniqueness)
    out.append(
        verdict("bsde.uniqueness-check", anchors.BSDE_UNIQUENESS, uniqueness.adaptedness_z[-1], 3.0,
                uniqueness.passed[0] and not uniqueness.passed[-1], epsilons=uniqueness.epsilons, p_values=uniqueness.p_values)
    )
    return out


def check_equivalence(exp: Experiment) -> List[Verdict]:
    tol = exp.cfg.tolerances
    ensemble = exp.small_ensemble
    fine = classical_equivalence_check(exp.u, exp.b, ensemble)
    coarse = classical_equivalence_check(_coarse(exp.u, 2), _coarse(exp.b, 2), ensemble.coarsen(2))
    bracket_rate = coarse.bracket_residual / fine.bracket_residual if fine.bracket_residual > 0 else float("inf")
    out = [
        verdict("bsde.bracket-rate", anchors.BSDE_EQUIVALENCE, bracket_rate, tol.rate_low,
                tol.rate_low <= bracket_rate <= tol.rate_high,
                residuals=[coarse.bracket_residual, fine.bracket_residual])
    ]
    if exp.b.is_zero() or fine.max_drift == 0.0:
        out.append(verdict("bsde.drift-identity", anchors.BSDE_EQUIVALENCE, fine.max_drift, 1e-12, fine.max_drift <= 1e-12))
    else:
        drift_rate = coarse.drift_residual / fine.drift_residual if fine.drift_residual > 0 else float("inf")
        out.append(
            verdict("bsde.drift-rate", anchors.BSDE_EQUIVALENCE, drift_rate, tol.rate_low,
                    tol.rate_low <= drift_rate <= tol.rate_high, residuals=[coarse.drift_residual, fine.drift_residual])
        )
    return out


def check_feynman_kac(exp: Experiment) -> List[Verdict]:
    tol = exp.cfg.tolerances
    u, b, f, terminal, ensemble = exp.u, exp.b, exp.generator, exp.terminal, exp.ensemble
    points = [(p.s, p.x0) for p in exp.cfg.points]
    if exp.smooth_drift:
        reference = solve_reference_fd(b, terminal, f)
        references = [
            float(interpolate(reference.at(int(round(s / reference.dt))), np.asarray([x0], dtype=float))[0, 0])
            for s, x0 in points
        ]
        tolerance = tol.feynman_kac
    else:
        references = None
        tolerance = tol.rough_feynman_kac_scale * np.sqrt(ensemble.dt)
    estimates = feynman_kac_at_points(u, b, f, terminal, points, ensemble, tolerance, references)
    exp.store.write_table("feynman_kac", [e.model_dump() for e in estimates])
    return [
        verdict(f"feynman-kac.point-{i}", anchors.FEYNMAN_KAC, e.error, 3.0 * e.stderr + e.tolerance, e.passed,
                s=e.s, x0=e.x0, estimate=e.estimate, reference=e.reference)
        for i, e in enumerate(estimates)
    ]


# --- Haar ---------------------------------------------------------------------

def check_haar(exp: Experiment) -> List[Verdict]:
    studies, tol = exp.cfg.studies, exp.cfg.tolerances
    grid = HAAR_GRID
    level = max(studies.haar_levels)
    gram = gram_matrix(grid, level)
    orthonormal = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))

    h = Field(grid, np.exp(-grid.coordinates()[0] ** 2))
    projected = haar_project(h, level)
    idempotent = float(np.max(np.abs(haar_project(projected, level).values - projected.values)))
    index = SobolevIndex(s=-0.3, r=2.0)
    error = sobolev_norm(h - projected, index)
    exp.store.write_table("haar_coefficients", haar_coefficients(h, level).rows())

    mollified = mollify_project(h, 4.0)
    contraction = sobolev_norm(mollified, index) / sobolev_norm(h, index)
    commutation = float(np.max(np.abs(
        (bessel_potential(mollified, -0.6) - mollify_project(bessel_potential(h, -0.6), 4.0)).values
    )))

    l = TimeField.from_function(grid, 1.0, 4, lambda t, x: (1.0 + t) * np.exp(-x[0] ** 2))
    convergence = uniform_convergence_report(l, studies.haar_levels, "haar", index)
    mollifier = uniform_convergence_report(l, [6, 10], "mollifier", index)
    operator = operator_norm_study(grid, levels=studies.haar_levels, index=index, samples=studies.samples, seed=studies.seed)
    _, density = density_approximant(l, level, "haar", index)
    return [
        verdict("haar.orthonormal", anchors.HAAR_BASIS, orthonormal, 1e-8, orthonormal <= 1e-8),
        verdict("haar.idempotent", anchors.HAAR_BASIS, idempotent, 1e-10, idempotent <= 1e-10),
        verdict("haar.projection-error", anchors.HAAR_DENSITY, error, tol.haar, error <= tol.haar, level=level),
        verdict("haar.mollifier-contraction", anchors.MOLLIFIER, contraction, 1.0 + 1e-8, contraction <= 1.0 + 1e-8),
        verdict("haar.bessel-commutation", anchors.MOLLIFIER, commutation, 1e-10, commutation <= 1e-10),
        verdict("haar.density-monotone", anchors.HAAR_DENSITY, convergence.sup_errors[-1], convergence.sup_errors[0],
                convergence.monotone and mollifier.monotone, levels=convergence.levels, errors=convergence.sup_errors,
                approximant_error=density.sup_error),
        verdict("haar.uniform-boundedness", anchors.HAAR_DENSITY, operator.constant, 3.0,
                bool(np.isfinite(operator.constant)) and operator.constant <= 3.0, ratios=operator.max_ratio_by_level),
    ]


# --- subcommand table ---------------------------------------------------------

def pde_checks(exp: Experiment) -> List[Verdict]:
    return (
        guarded("drift", anchors.DRIFT_REGULARITY, lambda: check_drift(exp))
        + guarded("linear-pde", anchors.LINEAR_MILD, lambda: check_linear_pde(exp))
        + guarded("semilinear-pde", anchors.SEMILINEAR_MILD, lambda: check_semilinear_pde(exp))
    )


def chain_rule_checks(exp: Experiment) -> List[Verdict]:
    return (
        guarded("chain-rule", anchors.CHAIN_RULE, lambda: check_chain_rule(exp))
        + guarded("orthogonality", anchors.ORTHOGONALITY, lambda: check_orthogonality(exp))
    )


def bsde_checks(exp: Experiment) -> List[Verdict]:
    verdicts = guarded("bsde", anchors.BSDE_MARTINGALE, lambda: check_bsde(exp))
    if exp.smooth_drift:
        verdicts += guarded("bsde-equivalence", anchors.BSDE_EQUIVALENCE, lambda: check_equivalence(exp))
    return verdicts


SUBCOMMANDS = {
    "validate-params": check_parameters,
    "solve-pde": pde_checks,
    "chain-rule-test": chain_rule_checks,
    "consistency-test": lambda exp: guarded("consistency", anchors.CLASSICAL_CONSISTENCY, lambda: check_consistency(exp)),
    "bsde-verify": bsde_checks,
    "feynman-kac": lambda exp: guarded("feynman-kac", anchors.FEYNMAN_KAC, lambda: check_feynman_kac(exp)),
    "haar-demo": lambda exp: guarded("haar", anchors.HAAR_BASIS, lambda: check_haar(exp)),
}
