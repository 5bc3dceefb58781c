"""Artifact store: Field codecs, TimeField manifests, CSV data products and report.json"""
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.spectral.field import Field, GridSpec, TimeField
from app.stochastic.occupation import PathFunctional
from app.utils.config import config
from app.utils.logger import logger

MAGIC = b"BSDF"
HEADER_INTS = 3
FLOAT_FORMAT = "%.17g"


# --- Field codecs -------------------------------------------------------------

def encode_field(field: Field) -> bytes:
    """MAGIC, int64 (d, n, channels), float64 L, then float64 samples in row-major order (little endian)"""
    grid = field.grid
    header = np.array([grid.d, grid.n, field.channels], dtype="<i8").tobytes()
    width = np.array([grid.half_width], dtype="<f8").tobytes()
    return MAGIC + header + width + np.ascontiguousarray(field.values, dtype="<f8").tobytes()


def decode_field(payload: bytes) -> Field:
    if payload[:4] != MAGIC:
        raise ValueError("not a field payload")
    offset = 4
    d, n, channels = (int(v) for v in np.frombuffer(payload, dtype="<i8", count=HEADER_INTS, offset=offset))
    offset += 8 * HEADER_INTS
    half_width = float(np.frombuffer(payload, dtype="<f8", count=1, offset=offset)[0])
    offset += 8
    grid = GridSpec(d=d, n=n, half_width=half_width)
    count = channels * n ** d
    values = np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
    if offset + 8 * count != len(payload):
        raise ValueError("field payload length does not match its header")
    return Field(grid, values.reshape((channels,) + grid.shape).copy())


def field_to_csv(field: Field) -> str:
    """Header row d,n,half_width,channels then one sample per line in row-major order"""
    grid = field.grid
    lines = ["d,n,half_width,channels", f"{grid.d},{grid.n},{grid.half_width!r},{field.channels}"]
    lines.extend(FLOAT_FORMAT % v for v in field.values.ravel())
    return "\n".join(lines) + "\n"


def field_from_csv(text: str) -> Field:
    lines = text.strip().splitlines()
    if lines[0].strip() != "d,n,half_width,channels":
        raise ValueError("not a field CSV")
    d, n, half_width, channels = lines[1].split(",")
    grid = GridSpec(d=int(d), n=int(n), half_width=float(half_width))
    values = np.array([float(v) for v in lines[2:]])
    return Field(grid, values.reshape((int(channels),) + grid.shape))


# --- store --------------------------------------------------------------------

def _jsonable(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, dict):
        return {k: _jsonable(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_jsonable(v) for v in payload]
    if isinstance(payload, np.generic):
        return payload.item()
    if isinstance(payload, np.ndarray):
        return payload.tolist()
    if isinstance(payload, float) and not np.isfinite(payload):
        return str(payload)
    return payload


def stable_json(payload: Any) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False)


class ArtifactStore:
    """Writes the artifacts of one run below a single output directory"""

    def __init__(self, root: Optional[Union[str, Path]] = None):
        self.root = Path(root or config.output_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []
        logger.info(f"Artifact store ready at {self.root}")

    def _path(self, name: str) -> Path:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(name)
        return path

    # Fields
    def write_field(self, name: str, field: Field, fmt: str = "bin") -> Path:
        if fmt == "bin":
            path = self._path(f"{name}.bin")
            path.write_bytes(encode_field(field))
        elif fmt == "csv":
            path = self._path(f"{name}.csv")
            path.write_text(field_to_csv(field), encoding="utf-8")
        else:
            raise ValueError(f"unknown field format {fmt!r}")
        return path

    @staticmethod
    def read_field(path: Union[str, Path]) -> Field:
        path = Path(path)
        if path.suffix == ".csv":
            return field_from_csv(path.read_text(encoding="utf-8"))
        return decode_field(path.read_bytes())

    def write_time_field(self, name: str, u: TimeField, certificate: Optional[BaseModel] = None) -> Path:
        """One binary file per node plus manifest.json with the time index"""
        files = []
        for k, snapshot in enumerate(u.fields()):
            self.write_field(f"{name}/t{k:05d}", snapshot)
            files.append(f"t{k:05d}.bin")
        manifest: Dict[str, Any] = {
            "grid": u.grid,
            "horizon": u.horizon,
            "steps": u.steps,
            "times": u.times.tolist(),
            "files": files,
        }
        if certificate is not None:
            manifest["certificate"] = certificate
        path = self._path(f"{name}/manifest.json")
        path.write_text(stable_json(manifest), encoding="utf-8")
        return path

    @classmethod
    def read_time_field(cls, directory: Union[str, Path]) -> TimeField:
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        fields = [cls.read_field(directory / f) for f in manifest["files"]]
        return TimeField.from_fields(fields, manifest["horizon"])

    # Tables
    def write_table(self, name: str, rows: Union[pd.DataFrame, Iterable[dict]]) -> Path:
        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
        path = self._path(f"{name}.csv")
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return path

    def write_path_functional(self, name: str, functional: PathFunctional, max_paths: Optional[int] = None) -> Path:
        """Long format: path_id, t, c0, c1, ..."""
        values = functional.values if max_paths is None else functional.values[:max_paths]
        paths, nodes, channels = values.shape
        frame = pd.DataFrame(
            {
                "path_id": np.repeat(np.arange(paths), nodes),
                "t": np.tile(functional.times, paths),
                **{f"c{c}": values[:, :, c].ravel() for c in range(channels)},
            }
        )
        return self.write_table(name, frame)

    # JSON
    def write_json(self, name: str, payload: Any) -> Path:
        path = self._path(f"{name}.json")
        path.write_text(stable_json(payload), encoding="utf-8")
        return path

    def write_report(self, payload: Dict[str, Any]) -> Path:
        """report.json with a generated_at timestamp; every other field is deterministic"""
        document = dict(payload)
        document["generated_at"] = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
        path = self._path("report.json")
        path.write_text(stable_json(document), encoding="utf-8")
        logger.info(f"📝 report written to {path}")
        return path
