import json

import numpy as np
import pytest

from src.modeling.errors import DataParseError, ModelFileError
from src.modeling.spectral import welch_psd
from src.modeling.spod import SnapshotEnsemble, compute_spod
from src.modeling.timeseries import estimate_pdf
from src.store.csv_store import (
    load_psd,
    load_weights,
    read_table,
    save_acf,
    save_pdf,
    save_psd,
    save_weights,
    write_table,
)
from src.store.snapshots import (
    MANIFEST,
    load_snapshots,
    load_spod_basis,
    save_snapshots,
    save_spod_basis,
    sidecar_path,
)


class TestCsvTables:
    def test_psd_file_keeps_sampling_frequency(self, tmp_path, rng):
        s = welch_psd(rng.standard_normal(2048), 0.3, nperseg=128)
        path = tmp_path / "psd.csv"
        save_psd(s, path, {"channel": "y1"})
        back = load_psd(path)
        np.testing.assert_array_equal(back.omega, s.omega)
        np.testing.assert_array_equal(back.values, s.values)
        assert back.omega_s == s.omega_s

    def test_psd_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_table(path, ("omega", "power"), [(0.0, 1.0), (1.0, 2.0)])
        with pytest.raises(DataParseError):
            load_psd(path)

    def test_metadata_values_are_json(self, tmp_path):
        path = tmp_path / "t.csv"
        write_table(path, ("a",), [(1.0,)], {"config": {"degree": 3}, "note": "plain"})
        meta, header, values = read_table(path)
        assert json.loads(meta["config"]) == {"degree": 3}
        assert meta["note"] == "plain"
        assert header == ("a",)
        assert values.shape == (1, 1)

    def test_pdf_and_acf_tables(self, tmp_path, rng):
        pdf = estimate_pdf(rng.standard_normal(5000), bins=20)
        save_pdf(pdf, tmp_path / "pdf.csv")
        _, header, values = read_table(tmp_path / "pdf.csv")
        assert header == ("center", "density", "ci_lo", "ci_hi")
        assert values.shape == (20, 4)

        save_acf(np.array([1.0, 0.5, 0.25]), 0.1, tmp_path / "acf.csv")
        _, header, values = read_table(tmp_path / "acf.csv")
        np.testing.assert_allclose(values[:, 0], [0.0, 0.1, 0.2])


class TestWeights:
    def test_named_column(self, tmp_path):
        save_weights(np.array([0.5, 1.5]), tmp_path / "w.csv")
        np.testing.assert_array_equal(load_weights(tmp_path / "w.csv"), [0.5, 1.5])

    def test_bare_column(self, tmp_path):
        (tmp_path / "w.csv").write_text("1\n2\n3\n")
        np.testing.assert_array_equal(load_weights(tmp_path / "w.csv"), [1.0, 2.0, 3.0])

    def test_bad_value_reports_line(self, tmp_path):
        (tmp_path / "w.csv").write_text("1.0\n2.0\nabc\n")
        with pytest.raises(DataParseError) as err:
            load_weights(tmp_path / "w.csv")
        assert err.value.line == 3


class TestSnapshots:
    def test_binary_with_sidecar(self, tmp_path, rng):
        ens = SnapshotEnsemble(rng.standard_normal((4, 30)), np.array([1.0, 2.0, 3.0, 4.0]), 0.25)
        path = tmp_path / "snap.bin"
        save_snapshots(ens, path, tmp_path / "w.csv")
        assert sidecar_path(path).name == "snap.bin.json"
        back = load_snapshots(path, tmp_path / "w.csv")
        np.testing.assert_array_equal(back.data, ens.data)
        np.testing.assert_array_equal(back.weights, ens.weights)
        assert back.dt == 0.25

    def test_size_mismatch(self, tmp_path, rng):
        path = tmp_path / "snap.bin"
        save_snapshots(SnapshotEnsemble(rng.standard_normal((4, 30)), np.ones(4), 1.0), path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DataParseError):
            load_snapshots(path)

    def test_bad_sidecar(self, tmp_path, rng):
        path = tmp_path / "snap.bin"
        save_snapshots(SnapshotEnsemble(rng.standard_normal((2, 8)), np.ones(2), 1.0), path)
        sidecar_path(path).write_text(json.dumps({"P": 2, "M": 8, "dt": -1.0}))
        with pytest.raises(DataParseError):
            load_snapshots(path)


class TestSpodBasisFiles:
    @pytest.fixture
    def basis(self, rng):
        ens = SnapshotEnsemble(rng.standard_normal((6, 512)), rng.uniform(0.5, 1.5, 6), 0.5)
        return compute_spod(ens, nperseg=32)

    def test_directory_layout(self, tmp_path, basis):
        save_spod_basis(basis, tmp_path / "basis")
        back = load_spod_basis(tmp_path / "basis")
        assert back.n_frequencies == basis.n_frequencies
        assert back.n_blocks == basis.n_blocks
        np.testing.assert_array_equal(back.weights, basis.weights)
        for a, b in zip(back.modes, basis.modes):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(back.energies, basis.energies):
            np.testing.assert_array_equal(a, b)

    def test_invalid_manifest_names_field(self, tmp_path, basis):
        save_spod_basis(basis, tmp_path / "basis")
        manifest = json.loads((tmp_path / "basis" / MANIFEST).read_text())
        manifest["n_blocks"] = 1
        (tmp_path / "basis" / MANIFEST).write_text(json.dumps(manifest))
        with pytest.raises(ModelFileError) as err:
            load_spod_basis(tmp_path / "basis")
        assert err.value.field == "n_blocks"

    def test_truncated_mode_file(self, tmp_path, basis):
        save_spod_basis(basis, tmp_path / "basis")
        mode_file = tmp_path / "basis" / "modes_00002.bin"
        mode_file.write_bytes(mode_file.read_bytes()[:16])
        with pytest.raises(ModelFileError) as err:
            load_spod_basis(tmp_path / "basis")
        assert err.value.field == "frequencies.2.file"
