import numpy as np
import pytest

from shiftbench.common import config as cfgmod
from shiftbench.lab.evolution import CircuitApprox
from shiftbench.lab.lattice import RingLattice


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Keep user defaults and caches inside the test's tmp dir."""
    monkeypatch.setattr(cfgmod, "CONFIG_FILE", tmp_path / "home" / "config.toml")
    monkeypatch.setenv("SHIFTBENCH_CACHE_DIR", str(tmp_path / "cache"))
    return tmp_path


@pytest.fixture
def ring1():
    return RingLattice(1)


@pytest.fixture
def ring2():
    return RingLattice(2)


@pytest.fixture
def random_circuit(ring2):
    return CircuitApprox.random(ring2, 7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2
