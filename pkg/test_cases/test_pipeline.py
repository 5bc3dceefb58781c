"""
Tests for experiment loading, the shared checks and the full-suite workflow.
"""
import json

import numpy as np
import pandas as pd
import pytest

from app.pipeline import anchors
from app.pipeline.checks import Experiment, build_terminal, check_parameters, check_spectral, guarded
from app.pipeline.graph import initial_state, should_continue_after_validation, suite_graph
from app.pipeline.state import ExperimentConfig, TerminalSection, load_experiment
from app.utils.errors import ConfigError, NonContractionError, ParameterRejection

MINIMAL = {"params": {"beta": 0.25, "q": 3.5, "delta": 0.6, "p": 3.0}}


def _write(tmp_path, payload, name="experiment.json"):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload), encoding="utf-8")
    return path


class TestLoadExperiment:
    def test_archived_experiments_load(self, cases_dir):
        for name in ("default.json", "smooth.json", "cli_small.json"):
            cfg = load_experiment(cases_dir / name)
            assert cfg.param_set().d == cfg.grid.d

    def test_defaults(self, tmp_path):
        cfg = load_experiment(_write(tmp_path, MINIMAL))
        assert cfg.grid.n == 512
        assert cfg.time.steps == 512
        assert cfg.drift.kind == "zero"
        assert len(cfg.points) == 5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_experiment(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_experiment(_write(tmp_path, "{params: "))

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment(_write(tmp_path, {**MINIMAL, "solver": {}}))

    def test_dimension_mismatch(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment(_write(tmp_path, {**MINIMAL, "grid": {"d": 2, "n": 64, "half_width": 5.0}}))

    def test_point_between_nodes(self, tmp_path):
        payload = {**MINIMAL, "time": {"steps": 512, "chain_rule_steps": 1024}, "points": [{"s": 0.001, "x0": [0.0]}]}
        with pytest.raises(ConfigError):
            load_experiment(_write(tmp_path, payload))

    def test_point_outside_the_box(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment(_write(tmp_path, {**MINIMAL, "points": [{"s": 0.0, "x0": [9.5]}]}))

    def test_bad_grid(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment(_write(tmp_path, {**MINIMAL, "grid": {"n": 100}}))

    def test_region_is_checked_on_demand(self, tmp_path):
        cfg = load_experiment(_write(tmp_path, {"params": {"beta": 0.6, "q": 3.0, "delta": 0.5, "p": 2.5}}))
        with pytest.raises(ParameterRejection) as info:
            cfg.param_set()
        assert info.value.code == "beta_range"


class TestChecks:
    def test_parameter_cases(self, cases_dir, store):
        exp = Experiment(load_experiment(cases_dir / "default.json"), store)
        verdicts = check_parameters(exp)
        assert len(verdicts) == 5
        assert all(v.passed for v in verdicts)
        assert all(v.anchor == anchors.PARAMETER_REGION for v in verdicts)
        table = pd.read_csv(store.root / "parameter_cases.csv")
        assert table["accepted"].tolist() == [True, True, False, True, False]
        assert table["code"].fillna("").tolist()[2] == "beta_range"

    def test_spectral_identities(self, cases_dir, store):
        exp = Experiment(load_experiment(cases_dir / "cli_small.json"), store)
        verdicts = {v.name: v for v in check_spectral(exp)}
        for name in (
            "spectral.fft-round-trip",
            "spectral.round-trip",
            "spectral.semigroup-law",
            "spectral.gradient-commutation",
            "spectral.norm-monotonicity",
            "spectral.quadrature-oracle",
        ):
            assert verdicts[name].passed, name
        assert verdicts["spectral.round-trip"].details["orders"] == [-1.0, -0.5, 0.3, 1.0, 2.0]
        assert verdicts["spectral.gradient-commutation"].anchor == anchors.HEAT_GRADIENT_COMMUTATION
        assert verdicts["spectral.quadrature-oracle"].anchor == anchors.SOBOLEV_QUADRATURE

    def test_guarded_turns_errors_into_verdicts(self):
        def failing():
            raise NonContractionError(1.2, 3)

        verdicts = guarded("pde", anchors.PICARD_CONTRACTION, failing)
        assert len(verdicts) == 1
        assert not verdicts[0].passed
        assert verdicts[0].statistic is None
        assert verdicts[0].details["error"] == "NonContractionError"

    def test_guarded_lets_rejection_through(self):
        def rejecting():
            raise ParameterRejection("beta_range", "β ∉ (0, 1/2)")

        with pytest.raises(ParameterRejection):
            guarded("drift", anchors.DRIFT_REGULARITY, rejecting)

    @pytest.mark.parametrize("kind", ["tapered_identity", "tapered_square", "gaussian_bump"])
    def test_terminal_conditions_vanish_at_the_edge(self, line_grid, kind):
        terminal = build_terminal(TerminalSection(kind=kind), line_grid)
        assert terminal.values[0, 0] == pytest.approx(0.0, abs=1e-10)
        assert np.all(np.isfinite(terminal.values))

    def test_tapered_identity_near_the_origin(self, line_grid):
        terminal = build_terminal(TerminalSection(kind="tapered_identity", amplitude=2.0), line_grid)
        x = line_grid.axis()
        middle = np.abs(x) < 5.0
        np.testing.assert_allclose(terminal.values[0, middle], 2.0 * x[middle])


class TestWorkflow:
    def test_routing(self):
        assert should_continue_after_validation({"params_valid": True, "rejection": None}) == "continue"
        assert should_continue_after_validation({"params_valid": False, "rejection": "beta_range"}) == "rejected"

    def test_rejected_parameters_skip_the_numerics(self, tmp_path, store):
        path = _write(tmp_path, {"params": {"beta": 0.6, "q": 3.0, "delta": 0.5, "p": 2.5}})
        cfg = load_experiment(path)
        final = suite_graph.invoke(initial_state(str(path), Experiment(cfg, store)))
        assert final["params_valid"] is False
        assert final["rejection"].startswith("beta_range")
        assert final["passed"] is False
        assert final["current_step"] == "completed"
        assert [v.name for v in final["verdicts"]] == ["parameters.config"]
        report = json.loads((store.root / "report.json").read_text(encoding="utf-8"))
        assert report["subcommand"] == "full-suite"
        assert report["passed"] is False
        assert "drift/manifest.json" not in final["artifacts"]

    def test_initial_state(self, cases_dir, store):
        exp = Experiment(ExperimentConfig.model_validate(MINIMAL), store)
        state = initial_state(str(cases_dir / "default.json"), exp)
        assert state["verdicts"] == [] and state["current_step"] == "start"
        assert state["experiment"] is exp
