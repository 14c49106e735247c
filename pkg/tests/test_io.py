import struct

import numpy as np
import pytest

from sieuler import io
from sieuler import spectral as sp
from sieuler.noise import build_spectrum, sample_brownian_table
from sieuler.stepper import simulate_path


def test_snapshot_byte_layout():
    xi = sp.field_from_modes([((-1, -1), 0.5), ((1, 0), 2.0)], 1)
    data = io.snapshot_bytes(xi)
    assert data[:4] == b"SIE2"
    assert struct.unpack("<IIQ", data[4:20]) == (1, 1, 8)
    assert len(data) == 20 + 8 * 16
    first = struct.unpack("<iid", data[20:36])
    assert first == (-1, -1, 0.5)
    # (1, 0) is the 7th mode in lexicographic order
    assert struct.unpack("<iid", data[20 + 6 * 16 : 20 + 7 * 16]) == (1, 0, 2.0)


def test_snapshot_roundtrip_bitwise(tmp_path):
    xi = sp.random_smooth_field(5, np.random.default_rng(0), 1.0)
    path = tmp_path / "x.sie2"
    io.write_snapshot(path, xi)
    assert np.array_equal(io.read_snapshot(path).coeffs, xi.coeffs)


def test_snapshot_bad_magic(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"XXXX" + io.snapshot_bytes(sp.SpectralField.zeros(1))[4:])
    with pytest.raises(io.FormatError, match="magic"):
        io.read_snapshot(path)


def test_snapshot_truncated(tmp_path):
    path = tmp_path / "short"
    path.write_bytes(io.snapshot_bytes(sp.SpectralField.zeros(2))[:-3])
    with pytest.raises(io.FormatError, match="truncated"):
        io.read_snapshot(path)


def test_snapshot_mode_outside_lattice(tmp_path):
    data = bytearray(io.snapshot_bytes(sp.SpectralField.zeros(1)))
    struct.pack_into("<ii", data, 20 + 7 * 16, 2, 2)
    path = tmp_path / "out"
    path.write_bytes(bytes(data))
    with pytest.raises(io.FormatError):
        io.read_snapshot(path)


def test_trajectory_roundtrip(tmp_path):
    spec = build_spectrum(3, 0.1, 6.0)
    traj = simulate_path(sp.preset_three_mode(3), spec, sample_brownian_table(spec, 8, 0.5, 1, 0), 0)
    path = tmp_path / "t.sie"
    io.write_trajectory(path, traj)
    meta, states = io.read_trajectory(path)
    assert meta["n"] == 8 and meta["seed"] == 1
    assert len(states) == 9
    for a, b in zip(states, traj.states):
        assert np.array_equal(a.coeffs, b.coeffs)


def test_noise_table_roundtrip(tmp_path):
    spec = build_spectrum(2, 1.0, 6.0)
    tab = sample_brownian_table(spec, 16, 1.0, 4, 0)
    path = tmp_path / "w.siew"
    io.write_noise_table(path, tab)
    N, data = io.read_noise_table(path)
    assert N == 2 and list(data) == sp.mode_list(2)
    for k1, k2 in sp.mode_list(2):
        assert np.array_equal(data[(k1, k2)], tab.beta[0][:, k1 + 2, k2 + 2])
    raw = path.read_bytes()
    assert raw[:4] == b"SIEW"
    assert len(raw) == 20 + 24 * (16 + 8 * 16)


def test_csv_float_format_roundtrips():
    for x in (0.1, 1 / 3, 1e-300, 2.0**-40):
        assert float(io.fmt(x)) == x
