import numpy as np
import pytest

from gsqg.checkpoint import MAGIC, export_csv, read_checkpoint, write_checkpoint
from gsqg.errors import ParameterError
from gsqg.initial import random_smooth
from gsqg.spectral import Grid2D


class TestCheckpoint:
    @pytest.mark.parametrize("rep", ["physical", "spectral"])
    def test_round_trip_is_exact(self, tmp_path, rep):
        f = random_smooth(Grid2D(16, L=3.0), seed=1)
        path = tmp_path / "f.bin"
        write_checkpoint(path, f, representation=rep, meta={"t": 0.5})
        g, header = read_checkpoint(path)
        assert header["n"] == 16 and header["L"] == 3.0 and header["meta"] == {"t": 0.5}
        assert header["endianness"] == "little" and header["schema_version"] == 1
        if rep == "physical":
            assert np.array_equal(g.physical, f.physical)
        else:
            assert np.array_equal(g.spectral, f.spectral)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x"
        path.write_bytes(b"nope\n")
        with pytest.raises(ParameterError):
            read_checkpoint(path)

    def test_layout(self, tmp_path):
        f = random_smooth(Grid2D(8))
        path = tmp_path / "f.bin"
        write_checkpoint(path, f)
        raw = path.read_bytes()
        assert raw.startswith(MAGIC)
        assert len(raw.split(b"\n", 2)[2]) == 8 * 8 * 8

    def test_unknown_representation(self, tmp_path):
        with pytest.raises(ParameterError):
            write_checkpoint(tmp_path / "f", random_smooth(Grid2D(8)), representation="x")

    def test_csv_export(self, tmp_path):
        f = random_smooth(Grid2D(8))
        path = tmp_path / "f.csv"
        export_csv(path, f)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (64, 3)
        assert np.array_equal(data[:, 2], f.physical.ravel())
