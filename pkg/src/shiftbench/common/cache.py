from __future__ import annotations

import hashlib
import json
import logging
import shutil
from pathlib import Path
from typing import Any, Dict, Optional

from ..lab.evolution import PropagatorPlan, propagate
from ..lab.hamiltonian import HamiltonianModel
from ..lab.linalg import DenseOperator
from .config import get_cache_dir
from .io_utils import atomic_write
from .opcodec import operator_decode, operator_encode

log = logging.getLogger(__name__)

__all__ = ["RunCache", "OperatorCache", "propagator_key", "cached_propagator"]


class RunCache:
    """<root>/runs/<hash>.json plus a copy of the artifact under the same hash."""

    def __init__(self, root: Optional[Path] = None):
        self.root = Path(root) if root is not None else get_cache_dir()
        self.runs = self.root / "runs"

    def _record(self, key: str) -> Path:
        return self.runs / f"{key}.json"

    def _artifact(self, key: str, suffix: str) -> Path:
        return self.runs / f"{key}{suffix}"

    def lookup(self, key: str) -> Optional[Dict[str, Any]]:
        path = self._record(key)
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            log.warning("ignoring unreadable cache record %s: %s", path, e)
            return None

    def restore(self, key: str, record: Dict[str, Any], dest: Path) -> bool:
        suffix = Path(record.get("artifact", "")).suffix
        src = self._artifact(key, suffix)
        if suffix != dest.suffix or not src.exists():
            return False
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(src, dest)
        return True

    def store(self, key: str, record: Dict[str, Any], artifact: Path) -> None:
        atomic_write(self._artifact(key, artifact.suffix), artifact.read_bytes())
        atomic_write(self._record(key), json.dumps(record, indent=2, default=str) + "\n")


class OperatorCache:
    """<root>/operators/<key>.sop frames; a bad frame counts as a miss."""

    def __init__(self, root: Optional[Path] = None):
        self.root = (Path(root) if root is not None else get_cache_dir()) / "operators"

    def path(self, key: str) -> Path:
        return self.root / f"{key}.sop"

    def get(self, key: str) -> Optional[DenseOperator]:
        path = self.path(key)
        if not path.exists():
            return None
        op, err = operator_decode(path.read_bytes())
        if err != 0:
            log.warning("operator cache frame %s rejected (err %d)", path.name, err)
            return None
        return op

    def put(self, key: str, op: DenseOperator) -> None:
        atomic_write(self.path(key), operator_encode(op))


def propagator_key(model: HamiltonianModel, t_total: float, dt: Optional[float]) -> str:
    text = f"{model.fingerprint()}|T={t_total!r}|dt={dt!r}"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cached_propagator(
    model: HamiltonianModel,
    t_total: float,
    dt: Optional[float] = None,
    cache: Optional[OperatorCache] = None,
) -> DenseOperator:
    plan = PropagatorPlan(model, t_total, dt)
    if cache is None:
        return propagate(plan)
    key = propagator_key(model, plan.t_total, plan.dt)
    hit = cache.get(key)
    if hit is not None:
        log.info("propagator cache hit %s", key[:12])
        return hit
    U = propagate(plan)
    cache.put(key, U)
    return U
