from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..lab.bounds import BoundParams
from ..lab.hamiltonian import ModelKind
from .errors import ConfigError, ResourceError

# User defaults: ~/.shiftbench/config.toml  (override with SHIFTBENCH_CONFIG_FILE)
CONFIG_FILE = Path(os.environ.get("SHIFTBENCH_CONFIG_FILE", Path.home() / ".shiftbench" / "config.toml"))
DEFAULT_CACHE_DIR = Path.home() / ".shiftbench" / "cache"

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:
    import tomli as tomllib

try:
    import tomli_w
except ModuleNotFoundError:
    tomli_w = None

__all__ = [
    "CONFIG_FILE",
    "ExperimentConfig",
    "load_config",
    "save_config",
    "get_cache_dir",
    "set_cache_dir",
    "clear_cache_dir",
    "get_defaults",
    "set_default",
    "clear_default",
    "read_toml",
    "set_dotted",
    "merge",
    "build_config",
]


# --- user defaults file --------------------------------------------------------


def _ensure_parent() -> None:
    CONFIG_FILE.parent.mkdir(parents=True, exist_ok=True)


def read_toml(path: Path) -> Dict[str, Any]:
    try:
        with Path(path).open("rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}")


def load_config() -> Dict[str, Any]:
    if CONFIG_FILE.exists():
        return read_toml(CONFIG_FILE)
    return {}


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    escaped = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def save_config(cfg: Dict[str, Any]) -> None:
    _ensure_parent()
    if tomli_w:
        with CONFIG_FILE.open("wb") as f:
            tomli_w.dump(cfg, f)
        return
    lines = []
    for table in ("cache", "defaults"):
        section = cfg.get(table, {})
        if section:
            lines.append(f"[{table}]")
            for key, value in section.items():
                # dotted default keys are quoted so they stay flat
                name = f'"{key}"' if "." in key else key
                lines.append(f"{name} = {_toml_value(value)}")
    CONFIG_FILE.write_text("\n".join(lines) + "\n", encoding="utf-8")


def get_cache_dir() -> Path:
    env = os.environ.get("SHIFTBENCH_CACHE_DIR")
    if env:
        return Path(env)
    saved = load_config().get("cache", {}).get("dir")
    return Path(saved) if saved else DEFAULT_CACHE_DIR


def set_cache_dir(path: str) -> None:
    cfg = load_config()
    cfg.setdefault("cache", {})["dir"] = str(path)
    save_config(cfg)


def clear_cache_dir() -> bool:
    cfg = load_config()
    if "dir" not in cfg.get("cache", {}):
        return False
    del cfg["cache"]["dir"]
    if not cfg["cache"]:
        del cfg["cache"]
    save_config(cfg)
    return True


def get_defaults() -> Dict[str, Any]:
    return dict(load_config().get("defaults", {}))


def set_default(key: str, value: Any) -> None:
    cfg = load_config()
    cfg.setdefault("defaults", {})[key] = value
    save_config(cfg)


def clear_default(key: str) -> bool:
    cfg = load_config()
    if key not in cfg.get("defaults", {}):
        return False
    del cfg["defaults"][key]
    if not cfg["defaults"]:
        del cfg["defaults"]
    save_config(cfg)
    return True


# --- experiment configuration --------------------------------------------------


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LatticeSection(_Section):
    l: int = Field(2, ge=1)
    n: Optional[int] = None

    @model_validator(mode="before")
    @classmethod
    def _l_from_n(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("n") is not None and "l" not in data:
            n = int(data["n"])
            if n % 4:
                raise ValueError(f"n must be a multiple of 4, got n={n}")
            data = {**data, "l": n // 4}
        return data

    @model_validator(mode="after")
    def _n_is_4l(self) -> LatticeSection:
        if self.n is None:
            self.n = 4 * self.l
        elif self.n != 4 * self.l:
            raise ValueError(f"n must equal 4*l: got n={self.n}, l={self.l}")
        return self


class ModelSection(_Section):
    kind: ModelKind = ModelKind.POWER_LAW
    alpha: Optional[float] = Field(None, gt=1)
    k: float = Field(1.0, gt=0)
    seed: int = 0
    saturate: bool = True
    breakpoints: List[float] = Field(default_factory=list)


class TimeSection(_Section):
    t: float = Field(1.0, ge=0)
    dt: Optional[float] = Field(None, gt=0)
    grid: List[float] = Field(default_factory=list)


class ToleranceSection(_Section):
    certificate: float = Field(1e-9, gt=0)
    unitary: float = Field(1e-10, gt=0)


class OutputSection(_Section):
    path: Optional[Path] = None
    format: Optional[Literal["csv", "json"]] = None


class ExperimentConfig(_Section):
    experiment: str
    lattice: LatticeSection = Field(default_factory=LatticeSection)
    model: ModelSection = Field(default_factory=ModelSection)
    time: TimeSection = Field(default_factory=TimeSection)
    output: OutputSection = Field(default_factory=OutputSection)
    tolerance: ToleranceSection = Field(default_factory=ToleranceSection)
    params: BoundParams = Field(default_factory=BoundParams)
    samples: int = Field(1, ge=1)
    seed: int = 0
    options: Dict[str, Any] = Field(default_factory=dict)

    def option(self, key: str, default: Any = None) -> Any:
        return self.options.get(key, default)

    @property
    def workers(self) -> int:
        return max(1, int(self.options.get("workers", 1)))

    def hashed_view(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude={"output"})

    def config_hash(self) -> str:
        from .io_utils import canonical_json

        return hashlib.sha256(canonical_json(self.hashed_view()).encode("utf-8")).hexdigest()


def set_dotted(tree: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    if not all(parts):
        raise ConfigError(f"bad key: {key!r}")
    node = tree
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"{key!r}: {part!r} is not a section")
        node = child
    node[parts[-1]] = value


def merge(base: Mapping[str, Any], over: Mapping[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for key, value in over.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def _flatten_dotted(flat: Mapping[str, Any]) -> Dict[str, Any]:
    tree: Dict[str, Any] = {}
    for key, value in flat.items():
        set_dotted(tree, key, value)
    return tree


def _check_cap(lattice: Mapping[str, Any], cap: int) -> None:
    n = lattice.get("n")
    if n is None and lattice.get("l") is not None:
        n = 4 * int(lattice["l"])
    if isinstance(n, int) and n > cap:
        raise ResourceError(f"n={n} exceeds the dense cap of {cap} sites")


def build_config(
    experiment: str,
    registry_defaults: Mapping[str, Any] | None = None,
    path: Optional[Path] = None,
    assignments: Mapping[str, Any] | None = None,
    flags: Mapping[str, Any] | None = None,
    user_defaults: bool = True,
    dense_cap: Optional[int] = None,
) -> ExperimentConfig:
    """Registry defaults < user [defaults] < config file < --set < flags.

    With ``dense_cap`` a ring larger than the cap is a ResourceError, raised before the
    lattice fields are validated against each other.
    """
    tree: Dict[str, Any] = {}
    for layer in (
        _flatten_dotted(registry_defaults or {}),
        _flatten_dotted(get_defaults()) if user_defaults else {},
        read_toml(path) if path else {},
        _flatten_dotted(assignments or {}),
        _flatten_dotted({k: v for k, v in (flags or {}).items() if v is not None}),
    ):
        tree = merge(tree, layer)
    file_experiment = tree.pop("experiment", None)
    if file_experiment is not None and file_experiment != experiment:
        raise ConfigError(f"config file is for {file_experiment!r}, asked to run {experiment!r}")
    if dense_cap is not None:
        _check_cap(tree.get("lattice", {}), dense_cap)
    try:
        return ExperimentConfig(experiment=experiment, **tree)
    except ValidationError as e:
        raise ConfigError(str(e))
