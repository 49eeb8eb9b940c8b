import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sombrero.grid import GridSpec, Rep, SpinorField
from sombrero.io import (
    HEADER_SIZE, SERIES_COLUMNS, SeriesFormatError, SnapshotFormatError, decode_snapshot,
    encode_snapshot, read_series, read_snapshot, write_series, write_snapshot,
)


def random_field(seed, shape=(16, 8), ncomp=2, rep=Rep.POSITION):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(ncomp,) + shape) + 1j * rng.normal(size=(ncomp,) + shape)
    return SpinorField(GridSpec(shape[0], shape[1], 3.5, 1.25), rep, data)


class TestSnapshot:
    @pytest.mark.parametrize("ncomp", [1, 2])
    @pytest.mark.parametrize("rep", [Rep.POSITION, Rep.MOMENTUM])
    def test_bit_exact_round_trip(self, tmp_path, ncomp, rep):
        f = random_field(ncomp, ncomp=ncomp, rep=rep)
        f.data[0, 0, 0] = complex(-0.0, 5e-324)
        path = tmp_path / "s.somb"
        write_snapshot(f, path, tau=np.pi)
        g, tau = read_snapshot(path)
        assert tau == np.pi
        assert g.rep is rep and g.grid == f.grid
        assert g.data.tobytes() == f.data.tobytes()

    def test_header_layout(self):
        buf = encode_snapshot(random_field(0), tau=1.5)
        assert HEADER_SIZE == 46
        assert buf[:5] == b"SOMB1"
        assert struct.unpack_from("<I", buf, 5)[0] == 0x01020304
        assert struct.unpack_from("<II", buf, 10) == (16, 8)
        assert len(buf) == 46 + 2 * 16 * 8 * 16

    @pytest.mark.parametrize("offset, value, message", [
        (0, b"SOMB2", "magic"),
        (5, struct.pack("<I", 0x04030201), "endianness"),
        (9, b"\x07", "representation"),
        (10, struct.pack("<I", 12), "grid"),
        (18, struct.pack("<d", float("nan")), "non-finite"),
        (18, struct.pack("<d", -1.0), "grid"),
        (42, struct.pack("<I", 3), "component"),
    ])
    def test_corrupt_header(self, offset, value, message):
        buf = bytearray(encode_snapshot(random_field(1)))
        buf[offset:offset + len(value)] = value
        with pytest.raises(SnapshotFormatError, match=message):
            decode_snapshot(bytes(buf))

    def test_truncated(self):
        buf = encode_snapshot(random_field(2))
        with pytest.raises(SnapshotFormatError, match="expected 4096 bytes, got 4095"):
            decode_snapshot(buf[:-1])
        with pytest.raises(SnapshotFormatError, match="header truncated"):
            decode_snapshot(buf[:20])

    @settings(max_examples=300, deadline=None)
    @given(st.binary(min_size=0, max_size=200), st.integers(0, 45))
    def test_fuzzed_headers_never_crash(self, junk, cut):
        good = encode_snapshot(random_field(3, shape=(8, 8), ncomp=1))
        buf = good[:cut] + junk + good[cut + len(junk):]
        try:
            f, tau = decode_snapshot(buf)
        except SnapshotFormatError:
            return
        assert f.data.shape[1:] == f.grid.shape and np.isfinite(tau)


class TestSeries:
    def test_identical_doubles(self, tmp_path):
        rng = np.random.default_rng(5)
        rows = []
        for k in range(50):
            vals = [k * 0.05] + list(rng.normal(size=len(SERIES_COLUMNS) - 2) * 10.0 ** rng.integers(-300, 300))
            rows.append(vals + ["norm_drift|edge_mass" if k % 7 == 0 else ""])
        rows[3][2] = float("nan")
        rows[4][3] = float("inf")
        path = tmp_path / "s.tsv"
        write_series(path, rows)
        back = read_series(path)
        for j, c in enumerate(SERIES_COLUMNS[:-1]):
            col = np.array([r[j] for r in rows], dtype=float)
            assert np.array_equal(back[c], col, equal_nan=True)
        assert back["flags"][0] == "norm_drift|edge_mass" and back["flags"][1] == ""

    def test_dict_rows(self, tmp_path):
        path = tmp_path / "d.tsv"
        write_series(path, [{"tau": 0.0, "P1": 1.0}, {"tau": 0.1, "P1": 0.9}], ("tau", "P1", "flags"))
        back = read_series(path)
        assert back["P1"].tolist() == [1.0, 0.9]

    def test_rejects_non_monotone(self, tmp_path):
        with pytest.raises(SeriesFormatError):
            write_series(tmp_path / "x.tsv", [[0.1, 1.0], [0.1, 2.0]], ("tau", "P1"))
        (tmp_path / "y.tsv").write_text("tau\tP1\n0.2\t1\n0.1\t2\n")
        with pytest.raises(SeriesFormatError):
            read_series(tmp_path / "y.tsv")

    def test_rejects_bad_rows(self, tmp_path):
        (tmp_path / "z.tsv").write_text("tau\tP1\n0.2\t1\t5\n")
        with pytest.raises(SeriesFormatError, match="line 2"):
            read_series(tmp_path / "z.tsv")
        (tmp_path / "w.tsv").write_text("tau\tP1\n0.2\tabc\n")
        with pytest.raises(SeriesFormatError, match="P1"):
            read_series(tmp_path / "w.tsv")
