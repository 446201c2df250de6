import struct

import numpy as np
import pytest

from magcnn.checkpoint import load_checkpoint, save_checkpoint
from magcnn.errors import FormatError, LoadError
from magcnn.grid import read_grid_cache, write_grid_cache
from magcnn.report import dump_json


def test_grid_cache_round_trip(tmp_path, rng):
    grids = [rng.normal(size=(6, 9, 2)), rng.normal(size=(6, 9, 2))]
    path = tmp_path / "g.mgrd"
    write_grid_cache(path, grids, [1, 0])
    back, labels = read_grid_cache(path)
    assert labels == [1, 0]
    for a, b in zip(grids, back):
        assert a.tobytes() == b.tobytes()


def test_grid_cache_layout(tmp_path):
    grid = np.arange(12, dtype=float).reshape(2, 3, 2)
    path = tmp_path / "g.mgrd"
    write_grid_cache(path, [grid], [3])
    raw = path.read_bytes()
    expect = b"MGRD" + struct.pack("<I", 1) + struct.pack("<4I", 3, 2, 3, 2)
    expect += struct.pack("<12d", *range(12))
    assert raw == expect


def test_grid_cache_errors(tmp_path):
    with pytest.raises(LoadError):
        read_grid_cache(tmp_path / "missing")
    bad = tmp_path / "bad"
    bad.write_bytes(b"XXXX\x01\x00\x00\x00")
    with pytest.raises(FormatError, match="magic"):
        read_grid_cache(bad)
    path = tmp_path / "t.mgrd"
    write_grid_cache(path, [np.ones((3, 3, 1))], [0])
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FormatError, match="truncated"):
        read_grid_cache(path)
    path.write_bytes(b"MGRD" + struct.pack("<I", 9))
    with pytest.raises(FormatError, match="version"):
        read_grid_cache(path)


def test_checkpoint_round_trip(tmp_path, rng):
    params = {"conv1.weight": rng.normal(size=(4, 3, 2)), "conv1.bias": np.zeros(4),
              "attn.vector": rng.normal(size=(2, 4))}
    path = tmp_path / "m.mprm"
    save_checkpoint(path, params)
    back = load_checkpoint(path)
    assert list(back) == list(params)
    for k in params:
        assert back[k].shape == params[k].shape
        assert back[k].tobytes() == params[k].tobytes()


def test_checkpoint_layout(tmp_path):
    path = tmp_path / "m.mprm"
    save_checkpoint(path, {"w": np.array([[1.5, -2.0]])})
    expect = (b"MPRM" + struct.pack("<II", 1, 1) + struct.pack("<I", 1) + b"w"
              + struct.pack("<I", 2) + struct.pack("<2I", 1, 2) + struct.pack("<2d", 1.5, -2.0))
    assert path.read_bytes() == expect


def test_checkpoint_errors(tmp_path):
    with pytest.raises(LoadError):
        load_checkpoint(tmp_path / "none.mprm")
    path = tmp_path / "m.mprm"
    save_checkpoint(path, {"weights": np.ones((2, 2))})
    raw = path.read_bytes()
    path.write_bytes(b"ABCD" + raw[4:])
    with pytest.raises(FormatError, match="magic"):
        load_checkpoint(path)
    for cut in (10, 16, len(raw) - 4):
        path.write_bytes(raw[:cut])
        with pytest.raises(FormatError, match="truncated"):
            load_checkpoint(path)
    path.write_bytes(raw + b"\x00")
    with pytest.raises(FormatError, match="trailing"):
        load_checkpoint(path)


def test_dump_json_formatting():
    text = dump_json({"b": 0.1, "a": [1, 2.0, float("nan")], "c": -0.0, "d": "x"})
    assert text == ('{\n  "a": [\n    1,\n    2.000000,\n    null\n  ],\n  "b": 0.100000,\n'
                    '  "c": 0.000000,\n  "d": "x"\n}\n')
