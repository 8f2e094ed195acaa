import numpy as np
import pytest

from shiftbench.common import config as cfgmod
from shiftbench.common.cache import OperatorCache, RunCache, cached_propagator, propagator_key
from shiftbench.common.config import build_config
from shiftbench.common.errors import ConfigError, ResourceError
from shiftbench.common.io_utils import csv_text, decimal_strings, parse_assignment, parse_value
from shiftbench.common.opcodec import (
    ERR_CRC,
    ERR_SHORT,
    ERR_SYNC,
    ERR_VERSION,
    operator_decode,
    operator_encode,
)
from shiftbench.lab.hamiltonian import build_nearest_neighbor
from shiftbench.lab.linalg import random_unitary


def test_operator_frame_decodes():
    op = random_unitary((1, 3, 4), 5)
    op2, err = operator_decode(operator_encode(op))
    assert err == 0
    assert op2.sites == (1, 3, 4)
    assert np.array_equal(op2.matrix, op.matrix)


def test_operator_frame_errors():
    frame = bytearray(operator_encode(random_unitary((0, 1), 2)))
    assert operator_decode(bytes(frame[:4]))[1] == ERR_SHORT
    assert operator_decode(bytes(frame[:-1]))[1] == ERR_SHORT

    bad = bytearray(frame)
    bad[0] ^= 0xFF
    assert operator_decode(bytes(bad)) == (None, ERR_SYNC)

    bad = bytearray(frame)
    bad[2] = 9
    assert operator_decode(bytes(bad)) == (None, ERR_VERSION)

    bad = bytearray(frame)
    bad[-1] ^= 0x01
    assert operator_decode(bytes(bad)) == (None, ERR_CRC)


def test_precedence(tmp_path):
    defaults = {"time.t": 2.0, "seed": 1}
    assert build_config("scan-lr", defaults).time.t == 2.0
    cfgmod.set_default("time.t", 3.0)
    assert build_config("scan-lr", defaults).time.t == 3.0
    path = tmp_path / "run.toml"
    path.write_text("[time]\nt = 4.0\n")
    assert build_config("scan-lr", defaults, path).time.t == 4.0
    assert build_config("scan-lr", defaults, path, {"time.t": 5.0}).time.t == 5.0
    cfg = build_config("scan-lr", defaults, path, {"time.t": 5.0}, {"time.t": 6.0, "seed": None})
    assert cfg.time.t == 6.0
    assert cfg.seed == 1


def test_lattice_validation():
    assert build_config("x", flags={"lattice.n": 12}).lattice.l == 3
    assert build_config("x", flags={"lattice.l": 1}).lattice.n == 4
    with pytest.raises(ConfigError):
        build_config("x", flags={"lattice.n": 10})
    with pytest.raises(ConfigError):
        build_config("x", flags={"lattice.l": 2, "lattice.n": 12})


def test_dense_cap_is_a_resource_error():
    with pytest.raises(ResourceError) as exc:
        build_config("x", flags={"lattice.n": 14}, dense_cap=12)
    assert exc.value.exit_code == 3
    with pytest.raises(ResourceError):
        build_config("x", flags={"lattice.l": 4}, dense_cap=12)


def test_rejects_unknown_keys_and_other_experiments(tmp_path):
    with pytest.raises(ConfigError):
        build_config("x", assignments={"lattice.foo": 1})
    with pytest.raises(ConfigError):
        build_config("x", assignments={"tolerance.certificate": 0.0})
    path = tmp_path / "run.toml"
    path.write_text('experiment = "scan-lr"\n')
    with pytest.raises(ConfigError):
        build_config("circuitize", path=path)
    with pytest.raises(ConfigError):
        build_config("x", path=tmp_path / "missing.toml")


def test_config_hash_ignores_output():
    a = build_config("x", flags={"output.path": "a.csv"})
    b = build_config("x", flags={"output.path": "b.json", "output.format": "json"})
    c = build_config("x", flags={"seed": 3})
    d = build_config("x", assignments={"tolerance.unitary": 1e-8})
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()
    assert a.config_hash() != d.config_hash()


def test_user_defaults_file():
    cfgmod.set_default("model.alpha", 2.5)
    cfgmod.set_cache_dir("/tmp/elsewhere")
    assert cfgmod.get_defaults() == {"model.alpha": 2.5}
    assert cfgmod.clear_default("model.alpha")
    assert not cfgmod.clear_default("model.alpha")
    assert cfgmod.clear_cache_dir()
    assert cfgmod.load_config() == {}


def test_parse_assignment():
    assert parse_assignment('options.a="Z0"') == ("options.a", "Z0")
    assert parse_assignment("time.grid=[0, 0.5]") == ("time.grid", [0, 0.5])
    assert parse_value("3") == 3
    assert parse_value("true") is True
    assert parse_value("hello") == "hello"
    for bad in ("=3", "a b=1", "novalue"):
        with pytest.raises(ConfigError):
            parse_assignment(bad)


def test_csv_text_layout():
    text = csv_text(["a", "b"], [{"a": 0.5, "b": True}, {"a": 1}], "abc123")
    lines = text.splitlines()
    assert lines[0].startswith("# shiftbench ")
    assert lines[0].endswith("config_hash=abc123")
    assert lines[1] == "a,b"
    assert lines[2] == "5.000000000000e-01,true"
    assert lines[3] == "1,"


def test_decimal_strings():
    assert decimal_strings({"x": [0.25, 1, False]}) == {"x": ["2.500000000000e-01", 1, False]}


def test_run_cache_restores_matching_suffix(tmp_path):
    cache = RunCache(tmp_path / "cache")
    artifact = tmp_path / "out.csv"
    artifact.write_text("payload")
    cache.store("k", {"artifact": artifact.name, "passed": True}, artifact)
    record = cache.lookup("k")
    assert record["passed"] is True
    assert not cache.restore("k", record, tmp_path / "copy.json")
    assert cache.restore("k", record, tmp_path / "copy.csv")
    assert (tmp_path / "copy.csv").read_text() == "payload"
    assert cache.lookup("missing") is None


def test_cached_propagator(tmp_path, ring1):
    model = build_nearest_neighbor(ring1, seed=1)
    cache = OperatorCache(tmp_path)
    U = cached_propagator(model, 0.5, 0.125, cache)
    key = propagator_key(model, 0.5, 0.125)
    assert cache.path(key).exists()
    assert np.array_equal(cached_propagator(model, 0.5, 0.125, cache).matrix, U.matrix)
    cache.path(key).write_bytes(b"junk")
    assert cache.get(key) is None
