from __future__ import annotations

import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from axmhd.config import InitialSpec
from axmhd.diagnostics import CumulativeIntegrals
from axmhd.evolve import initial_state
from axmhd.grid_fields import Parity, ScalarField, make_grid
from axmhd.persistence import (
    MAGIC,
    Checkpoint,
    Snapshot,
    SnapshotError,
    decode_snapshot,
    encode_snapshot,
    ndjson_line,
    read_snapshot,
    write_snapshot,
)

from conftest import strip_grid


def test_header_layout():
    g = make_grid(2, 4, 1.0, 2.0)
    v = np.arange(8.0).reshape(2, 4)
    data = encode_snapshot(Snapshot(g, 0.5, {"Pi": ScalarField(g, Parity.EVEN, v)}))
    assert data[:6] == MAGIC
    assert struct.unpack_from("<IIIdddI", data, 6) == (1, 2, 4, 1.0, 2.0, 0.5, 1)
    off = 6 + 4 * 3 + 8 * 3 + 4
    assert struct.unpack_from("<I", data, off)[0] == 2 and data[off + 4 : off + 6] == b"Pi"
    assert data[off + 6] == 0
    body = np.frombuffer(data, "<f8", offset=off + 7)
    # r index fastest
    np.testing.assert_array_equal(body[:4], [0.0, 4.0, 1.0, 5.0])


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=30, deadline=None)
@given(v=arrays(np.float64, (4, 8), elements=finite), t=finite, odd=st.booleans())
def test_roundtrip_bit_exact(v, t, odd):
    g = make_grid(4, 8, 1.5, 3.0)
    snap = Snapshot(g, t, {"B": ScalarField(g, Parity.ODD if odd else Parity.EVEN, v)})
    back = decode_snapshot(encode_snapshot(snap))
    assert back.identical(snap)
    assert encode_snapshot(back) == encode_snapshot(snap)


def test_file_roundtrip(tmp_path):
    s = initial_state(*InitialSpec().fields(strip_grid(16)))
    p = tmp_path / "s.axs"
    write_snapshot(str(p), Snapshot.from_state(s))
    assert read_snapshot(str(p)).identical(Snapshot.from_state(s))


@pytest.mark.parametrize("cut", [3, 40, -1])
def test_truncated_or_corrupt(cut):
    g = make_grid(2, 4, 1.0, 2.0)
    data = encode_snapshot(Snapshot(g, 0.0, {"Pi": ScalarField(g, Parity.EVEN, np.zeros((2, 4)))}))
    with pytest.raises(SnapshotError):
        decode_snapshot(data[:cut])


def test_bad_magic():
    g = make_grid(2, 4, 1.0, 2.0)
    data = encode_snapshot(Snapshot(g, 0.0, {}))
    with pytest.raises(SnapshotError):
        decode_snapshot(b"XXXXXX" + data[6:])


def test_ndjson_line_is_compact_and_ordered():
    line = ndjson_line({"b": 0.1, "a": 1e-300})
    assert line == '{"b":0.1,"a":1e-300}\n'
    assert list(json.loads(line)) == ["b", "a"]
    with pytest.raises(ValueError):
        ndjson_line({"x": float("nan")})


def test_checkpoint_roundtrip(tmp_path):
    s = initial_state(*InitialSpec().fields(strip_grid(16)))
    I = CumulativeIntegrals()
    I.observe(0.0, dict.fromkeys(I.INTEGRANDS, 0.1))
    ck = Checkpoint("[run]\n", 7, s, [], I, {"pi_bounds": {"min": 0.0}})
    ck.write(str(tmp_path / "ck.json"))
    back = Checkpoint.read(str(tmp_path / "ck.json"))
    assert back.step == 7 and back.integrals == I and back.extra == ck.extra
    assert back.state.omega_linf0 == s.omega_linf0
    assert Snapshot.from_state(back.state).identical(Snapshot.from_state(s))
