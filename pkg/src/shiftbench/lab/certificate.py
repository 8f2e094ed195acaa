from __future__ import annotations

import dataclasses
import math
from enum import Enum
from typing import Any, Dict, List

import numpy as np

from ..common.errors import CertificateError

__all__ = ["Certificate", "jsonable", "unreported"]


def unreported(**kwargs: Any) -> Any:
    """Dataclass field left out of ``to_dict``."""
    return dataclasses.field(metadata={"report": False}, **kwargs)


def jsonable(value: Any) -> Any:
    """Plain-Python view of a certificate field; operators and arrays are dropped (None)."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, str):
        return value
    if isinstance(value, dict):
        out = {str(k): jsonable(v) for k, v in value.items()}
        return {k: v for k, v in out.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return None


class Certificate:
    """Mixin for dataclass reports holding measured quantities and named inequalities.

    Subclasses implement ``checks()``; ``require()`` raises on the first report with a
    violated check, naming every violated one.
    """

    name: str = "certificate"

    def checks(self) -> Dict[str, bool]:
        raise NotImplementedError

    @property
    def passed(self) -> bool:
        return all(self.checks().values())

    @property
    def violated(self) -> List[str]:
        return [k for k, ok in self.checks().items() if not ok]

    def require(self):
        bad = self.violated
        if bad:
            raise CertificateError(self.name, bad)
        return self

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for f in dataclasses.fields(self):
            if not f.metadata.get("report", True):
                continue
            v = jsonable(getattr(self, f.name))
            if v is not None:
                out[f.name] = v
        out["checks"] = {k: bool(v) for k, v in self.checks().items()}
        out["passed"] = self.passed
        return out
