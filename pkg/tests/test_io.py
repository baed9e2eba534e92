"""Delimited output round trips and manifests."""

import json

import numpy as np
import pytest

from bfamily import io
from bfamily.evolution import EvolutionConfig, evolve
from bfamily.exact import gaussian_ic, sample
from bfamily.spectral import make_grid
from bfamily.stability import SpectrumResult


@pytest.fixture(scope="module")
def series():
    g = make_grid(50.0, 64)
    return evolve(sample(g, gaussian_ic, 4.0, 25.0), EvolutionConfig(2.0, g, 2.0, snapshot_interval=1.0))


class TestFormatting:
    @pytest.mark.parametrize("x", [0.1, 1 / 3, -2.5e-300, 1e300, 7.0])
    def test_float_round_trip(self, x):
        assert float(io.fmt_float(x)) == x


class TestSnapshots:
    def test_round_trip(self, tmp_path, series):
        p = io.write_snapshots_csv(tmp_path / "s.csv", series)
        t, x, U = io.read_snapshots_csv(p)
        np.testing.assert_array_equal(t, series.times)
        np.testing.assert_array_equal(x, series.grid.x)
        np.testing.assert_array_equal(U, np.array([f.values for f in series.fields]))
        assert p.read_text().splitlines()[0] == "t,x,u"

    def test_stride(self, tmp_path, series):
        t, x, U = io.read_snapshots_csv(io.write_snapshots_csv(tmp_path / "s.csv", series, 4))
        assert U.shape == (3, 16)

    def test_contour(self, tmp_path, series):
        U = np.array([f.values for f in series.fields])
        p = io.write_contour_matrix(tmp_path / "c.txt", series.times, series.grid.x, U)
        extent, V = io.read_contour_matrix(p)
        np.testing.assert_array_equal(V, U)
        assert extent == (0.0, 2.0, 0.0, series.grid.x[-1])

    def test_contour_shape_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            io.write_contour_matrix(tmp_path / "c.txt", [0, 1], [0, 1, 2], np.zeros((2, 2)))

    def test_contour_rejects_foreign_file(self, tmp_path):
        (tmp_path / "x.txt").write_text("1 2 3\n")
        with pytest.raises(ValueError):
            io.read_contour_matrix(tmp_path / "x.txt")


class TestSpectrumAndScan:
    def test_spectrum_sorted_and_exact(self, tmp_path):
        ev = np.array([0.1 + 2j, -1.0 + 0j, 0.1 - 2j, 3.0 + 0.5j])
        p = io.write_spectrum_csv(tmp_path / "s.csv", SpectrumResult(ev, 3.0))
        back = io.read_spectrum_csv(p)
        assert back[0] == 3.0 + 0.5j
        assert sorted(back, key=lambda z: (z.real, z.imag)) == sorted(ev, key=lambda z: (z.real, z.imag))

    def test_band_scan(self, tmp_path):
        rows = [io.BandScanRow(0.2 + 0j, "setA", True, 1e-9), io.BandScanRow(0.6 + 0j, "setA", False, None)]
        lines = io.write_band_scan_csv(tmp_path / "b.csv", rows).read_text().splitlines()
        assert lines[0] == "re_lambda,im_lambda,space,member,residual"
        assert lines[1] == "0.20000000000000001,0,setA,true,1.0000000000000001e-09"
        assert lines[2].endswith("false,")


class TestManifest:
    def test_write_and_hashes(self, tmp_path):
        f = io.write_rows(tmp_path / "a.csv", ["x"], [["1"]])
        m = io.RunManifest("evolve", {"b": 2.0}, "0.0", "completed", figure="Fig. 3")
        m.register(f)
        m.results = {"z": 1 + 2j, "n": np.int64(3), "v": np.array([1.0, np.inf])}
        data = json.loads(m.write(tmp_path).read_text())
        assert data["outputs"]["a.csv"] == io.sha256sum(f)
        assert data["results"] == {"z": {"re": 1.0, "im": 2.0}, "n": 3, "v": [1.0, "inf"]}
        assert data["figure"] == "Fig. 3"

    def test_json_is_deterministic(self, tmp_path):
        a = io.write_json(tmp_path / "a.json", {"b": 1, "a": [0.1]}).read_bytes()
        b = io.write_json(tmp_path / "b.json", {"a": [0.1], "b": 1}).read_bytes()
        assert a == b
