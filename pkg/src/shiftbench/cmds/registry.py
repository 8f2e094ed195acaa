from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Literal

from ..common.errors import ConfigError

Runner = Callable[[Any], Any]


@dataclass(frozen=True)
class Experiment:
    name: str
    runner: Runner
    help: str
    default_format: Literal["csv", "json"] = "json"
    dense: bool = True
    defaults: Dict[str, Any] = field(default_factory=dict)


_Registry: Dict[str, Experiment] = {}


def register(
    name: str,
    *,
    help: str,
    default_format: Literal["csv", "json"] = "json",
    dense: bool = True,
    defaults: Dict[str, Any] | None = None,
) -> Callable[[Runner], Runner]:
    """``defaults`` are dotted keys applied beneath user defaults and config files."""

    def _wrap(fn: Runner) -> Runner:
        _Registry[name] = Experiment(name, fn, help, default_format, dense, dict(defaults or {}))
        return fn

    return _wrap


def lookup(name: str) -> Experiment:
    exp = _Registry.get(name)
    if exp is None:
        known = ", ".join(sorted(_Registry)) or "none"
        raise ConfigError(f"unknown experiment {name!r} (known: {known})")
    return exp


def experiments() -> List[Experiment]:
    return [_Registry[k] for k in sorted(_Registry)]
