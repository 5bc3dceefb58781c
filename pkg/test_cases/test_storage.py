"""
Tests for the field codecs and the artifact store.
"""
import json

import numpy as np
import pandas as pd
import pytest

from app.approx.drivers import RoughDriverSpec, make_driver
from app.spectral.field import Field, GridSpec, TimeField, gaussian_bump
from app.spectral.studies import rough_sample
from app.stochastic.occupation import a_ww_smooth
from app.storage.artifact_store import (
    ArtifactStore,
    decode_field,
    encode_field,
    field_from_csv,
    field_to_csv,
    stable_json,
)


class TestCodecs:
    def test_binary_is_lossless(self):
        grid = GridSpec(d=2, n=16, half_width=3.0)
        field = Field.stack([rough_sample(grid, np.random.default_rng(0), 0.3), gaussian_bump(grid)])
        back = decode_field(encode_field(field))
        assert back.grid == grid
        np.testing.assert_array_equal(back.values, field.values)

    def test_binary_header(self, line_grid):
        payload = encode_field(gaussian_bump(line_grid))
        assert payload[:4] == b"BSDF"
        assert len(payload) == 4 + 3 * 8 + 8 + 8 * line_grid.n

    def test_bad_magic(self, line_grid):
        payload = encode_field(gaussian_bump(line_grid))
        with pytest.raises(ValueError):
            decode_field(b"XXXX" + payload[4:])

    def test_length_mismatch(self, line_grid):
        payload = encode_field(gaussian_bump(line_grid))
        with pytest.raises(ValueError):
            decode_field(payload + b"\x00" * 8)
        with pytest.raises(ValueError):
            decode_field(payload[:-8])

    def test_csv_is_lossless(self, line_grid):
        field = rough_sample(line_grid, np.random.default_rng(1), 0.1)
        text = field_to_csv(field)
        assert text.splitlines()[0] == "d,n,half_width,channels"
        np.testing.assert_array_equal(field_from_csv(text).values, field.values)

    def test_csv_header_is_checked(self):
        with pytest.raises(ValueError):
            field_from_csv("x,y\n1,2\n")


class TestStableJson:
    def test_non_finite_values_become_strings(self):
        document = json.loads(stable_json({"a": float("inf"), "b": [np.float64(1.5), float("nan")]}))
        assert document == {"a": "inf", "b": [1.5, "nan"]}

    def test_keys_are_sorted(self):
        assert stable_json({"b": 1, "a": 2}).index('"a"') < stable_json({"b": 1, "a": 2}).index('"b"')

    def test_models_and_arrays(self, line_grid):
        document = json.loads(stable_json({"grid": line_grid, "values": np.arange(3)}))
        assert document["grid"] == {"d": 1, "n": 128, "half_width": 10.0}
        assert document["values"] == [0, 1, 2]


class TestArtifactStore:
    def test_field_formats(self, store, line_grid):
        field = gaussian_bump(line_grid)
        for fmt in ("bin", "csv"):
            path = store.write_field(f"fields/bump_{fmt}", field, fmt)
            np.testing.assert_array_equal(ArtifactStore.read_field(path).values, field.values)
        with pytest.raises(ValueError):
            store.write_field("fields/bump", field, "npz")

    def test_time_field_with_certificate(self, store, line_grid, param):
        driver = make_driver(RoughDriverSpec(kind="smooth_bump"), line_grid, 1.0, 4, param.beta, param.q)
        manifest_path = store.write_time_field("b", driver.field, driver.certificate)
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        assert manifest["steps"] == 4
        assert manifest["files"][0] == "t00000.bin"
        assert manifest["certificate"]["admissible"] is True
        back = ArtifactStore.read_time_field(manifest_path.parent)
        np.testing.assert_array_equal(back.snapshots, driver.field.snapshots)
        assert back.horizon == 1.0

    def test_tables(self, store):
        path = store.write_table("sweep", [{"beta": 0.25, "accepted": True}, {"beta": 0.6, "accepted": False}])
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["beta", "accepted"]
        assert frame["accepted"].tolist() == [True, False]

    def test_path_functional_long_format(self, store, ensemble):
        functional = a_ww_smooth(lambda t, x: 1.0, ensemble)
        frame = pd.read_csv(store.write_path_functional("occupation", functional, max_paths=3))
        assert list(frame.columns) == ["path_id", "t", "c0"]
        assert len(frame) == 3 * (ensemble.steps + 1)
        last = frame[frame["path_id"] == 2].iloc[-1]
        assert last["c0"] == pytest.approx(1.0)

    def test_report_is_stamped(self, store):
        path = store.write_report({"subcommand": "solve-pde", "passed": True})
        document = json.loads(path.read_text(encoding="utf-8"))
        assert document["passed"] is True
        assert "generated_at" in document
        assert "report.json" in store.written

    def test_default_root_comes_from_config(self, monkeypatch, tmp_path):
        monkeypatch.setenv("BSDE_LAB_OUTPUT_DIR", str(tmp_path / "configured"))
        store = ArtifactStore()
        assert store.root == tmp_path / "configured"
        assert store.root.is_dir()

    def test_empty_time_field_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ArtifactStore.read_time_field(tmp_path)


def test_time_field_manifest_times(store, line_grid):
    u = TimeField.constant_in_time(gaussian_bump(line_grid), 2.0, 2)
    manifest = json.loads(store.write_time_field("u", u).read_text(encoding="utf-8"))
    assert manifest["times"] == [0.0, 1.0, 2.0]
    assert "certificate" not in manifest
