"""Shared fixtures; log and output directories go to a scratch location before `app` is imported"""
import os
import sys
import tempfile
from pathlib import Path

_scratch = Path(tempfile.mkdtemp(prefix="bsde-lab-tests-"))
os.environ.setdefault("BSDE_LAB_LOG_DIR", str(_scratch / "logs"))
os.environ.setdefault("BSDE_LAB_OUTPUT_DIR", str(_scratch / "results"))

# Add repository root to Python path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import pytest  # noqa: E402

from app.pde.parameters import ParamSet  # noqa: E402
from app.spectral.field import GridSpec  # noqa: E402
from app.stochastic.paths import sample_ensemble  # noqa: E402
from app.storage.artifact_store import ArtifactStore  # noqa: E402

CASES_DIR = Path(__file__).resolve().parent


@pytest.fixture
def line_grid() -> GridSpec:
    return GridSpec(d=1, n=128, half_width=10.0)


@pytest.fixture
def fine_line_grid() -> GridSpec:
    return GridSpec(d=1, n=256, half_width=10.0)


@pytest.fixture
def param() -> ParamSet:
    return ParamSet(beta=0.25, q=3.5, delta=0.6, p=3.0)


@pytest.fixture
def ensemble():
    """200 paths x 64 steps on [0, 1]"""
    return sample_ensemble(200, 64, 1.0, d=1, seed=7)


@pytest.fixture
def store(tmp_path) -> ArtifactStore:
    return ArtifactStore(tmp_path / "artifacts")


@pytest.fixture
def cases_dir() -> Path:
    return CASES_DIR
