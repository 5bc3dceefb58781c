"""State schema for the experiment workflow and the experiment config file"""
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, TypedDict, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.approx.drivers import RoughDriverSpec
from app.pde.parameters import ParamSet, validate_params
from app.spectral.field import GridSpec
from app.utils.errors import ConfigError


class Verdict(BaseModel):
    """One acceptance check: the statistic, its threshold and whether it passed"""

    model_config = ConfigDict(frozen=True)

    name: str = Field(..., description="Check identifier, e.g. chain-rule.constant-forcing")
    anchor: str = Field(..., description="The mathematical property the check exercises")
    statistic: Optional[float] = Field(None, description="Measured value; None when the check errored")
    threshold: Optional[float] = Field(None, description="Bound the statistic is compared with")
    passed: bool
    details: Dict[str, Any] = Field(default_factory=dict)


class SuiteState(TypedDict):
    """
    State passed between nodes in the full-suite workflow.
    Heavy intermediate objects (fields, ensembles) live on the Experiment held by the graph.
    """
    # Input
    config_path: str
    experiment: Any  # checks.Experiment: config, store and lazily built fields

    # Validation
    params_valid: Optional[bool]
    rejection: Optional[str]

    # Results
    verdicts: List[Verdict]
    artifacts: List[str]

    # Final decision
    passed: Optional[bool]
    report_path: Optional[str]

    # Flow control
    current_step: str  # For logging


# --- experiment config --------------------------------------------------------

class ParamBlock(BaseModel):
    """Raw parameter tuple; the admissible region is checked by `param_set`, not at load time"""

    beta: float
    q: float
    delta: float
    p: float
    d: int = 1
    gamma: Optional[float] = None
    T: float = 1.0

    def as_mapping(self) -> Dict[str, Any]:
        return self.model_dump(exclude_none=True)


class ParameterCase(BaseModel):
    params: ParamBlock
    expect: Literal["accept", "reject"]
    code: Optional[str] = Field(None, description="Expected rejection code")


class TimeSection(BaseModel):
    steps: int = Field(512, ge=2)
    chain_rule_steps: int = Field(16384, ge=2, description="Fine grid for the linear-forcing identity")


class GeneratorSection(BaseModel):
    name: Literal["zero", "linear_in_y", "saturating_in_z"] = "zero"
    constant: float = 0.0


class TerminalSection(BaseModel):
    kind: Literal["tapered_identity", "tapered_square", "gaussian_bump"] = "gaussian_bump"
    width: float = Field(1.0, gt=0)
    amplitude: float = 1.0


class EnsembleSection(BaseModel):
    paths: int = Field(10000, ge=1)
    seed: Optional[int] = None
    chain_rule_paths: int = Field(200, ge=2)
    orthogonality_paths: int = Field(1000, ge=2)


class ToleranceSection(BaseModel):
    picard: float = Field(1e-8, gt=0)
    max_iter: int = Field(100, ge=1)
    fd_relative: float = 1e-3
    feynman_kac: float = 1e-3
    rough_feynman_kac_scale: float = 5.0
    haar: float = 1e-2
    rate_low: float = 1.2
    rate_high: float = 2.8
    slope_relative: float = 0.1


class StudySection(BaseModel):
    samples: int = Field(20, ge=1)
    refinement_points: List[int] = Field(default_factory=lambda: [256, 512, 1024])
    haar_levels: List[int] = Field(default_factory=lambda: [2, 4, 8])
    seed: int = 0


class EvaluationPoint(BaseModel):
    s: float = Field(..., ge=0)
    x0: List[float]


def default_points() -> List[EvaluationPoint]:
    return [
        EvaluationPoint(s=0.0, x0=[0.0]),
        EvaluationPoint(s=0.0, x0=[0.5]),
        EvaluationPoint(s=0.25, x0=[-0.5]),
        EvaluationPoint(s=0.5, x0=[1.0]),
        EvaluationPoint(s=0.75, x0=[-1.0]),
    ]


class ExperimentConfig(BaseModel):
    """One archived experiment: every subcommand reads the sections it needs"""

    model_config = ConfigDict(extra="forbid")

    params: ParamBlock
    parameter_cases: List[ParameterCase] = Field(default_factory=list)
    grid: GridSpec = GridSpec()
    time: TimeSection = TimeSection()
    drift: RoughDriverSpec = RoughDriverSpec()
    generator: GeneratorSection = GeneratorSection()
    terminal: TerminalSection = TerminalSection()
    ensemble: EnsembleSection = EnsembleSection()
    tolerances: ToleranceSection = ToleranceSection()
    studies: StudySection = StudySection()
    points: List[EvaluationPoint] = Field(default_factory=default_points)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        if self.grid.d != self.params.d:
            raise ValueError(f"grid dimension {self.grid.d} differs from params.d = {self.params.d}")
        bound = self.grid.half_width - 1.0
        dt = self.params.T / self.time.steps
        for point in self.points:
            if len(point.x0) != self.grid.d:
                raise ValueError(f"evaluation point {point.x0} does not have {self.grid.d} coordinate(s)")
            if any(abs(x) > bound for x in point.x0):
                raise ValueError(f"evaluation point {point.x0} lies outside [-{bound}, {bound}]")
            if point.s >= self.params.T:
                raise ValueError(f"evaluation time {point.s} must be before T = {self.params.T}")
            if abs(point.s / dt - round(point.s / dt)) > 1e-9:
                raise ValueError(f"evaluation time {point.s} is not a node of the time grid")
        if self.time.chain_rule_steps % self.time.steps and self.time.steps % self.time.chain_rule_steps:
            raise ValueError("chain_rule_steps and steps must divide one another")
        return self

    def param_set(self) -> ParamSet:
        """Raises ParameterRejection outside the admissible region"""
        return validate_params(self.params.as_mapping())


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    """Parse and validate a JSON experiment file; any failure becomes ConfigError"""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"config file {path} failed validation: {e}") from e
