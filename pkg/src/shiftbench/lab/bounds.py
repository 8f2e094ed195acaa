"""Bound functions, time thresholds and constant fitting.

None of the constants here are known from first principles; ``BoundParams`` carries them
explicitly and records where they came from.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize, stats

from ..common.errors import DomainError, FitError
from .certificate import Certificate, unreported
from .linalg import TOL, NormMode

log = logging.getLogger(__name__)

TAIL_CUTOFF = 10**6
CRITICAL_XTOL = 1e-13
FIT_FLOOR = 1e-12
INFLATE = 1.0 + 1e-9
ALPHA_CRITICAL_EXACT = 2.0 + 1.0 / math.sqrt(2.0)

__all__ = [
    "BoundParams",
    "OutOfDomain",
    "OUT_OF_DOMAIN",
    "ThresholdSource",
    "FrontModel",
    "tail_constant",
    "g_alpha",
    "f_alpha",
    "zoo_exponent",
    "zoo_threshold",
    "conjecture_threshold",
    "critical_alpha",
    "crossover_residual",
    "lemma1_constant",
    "LinearFit",
    "loglinear_fit",
    "FitReport",
    "fit_front",
    "threshold_table",
]


class BoundParams(BaseModel):
    """Unspecified constants of the light-cone bounds and time thresholds."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    c_lr: float = Field(1.0, gt=0)
    mu: float = Field(1.0, gt=0)
    v: float = Field(1.0, gt=0)
    c_fb: float = Field(1.0, gt=0)
    c_alpha: Optional[float] = Field(None, gt=0)
    epsilon: float = Field(0.01, gt=0, lt=1)
    c_threshold: float = Field(0.0, ge=0)
    c_prime: float = Field(1.0, gt=0)
    c_fb_threshold: float = Field(1.0, gt=0)
    source: Literal["default", "fitted", "user"] = "default"

    def resolve_c_alpha(self, alpha: float, mode: NormMode | str = NormMode.OPERATOR) -> float:
        return self.c_alpha if self.c_alpha is not None else tail_constant(alpha, mode)


class OutOfDomain(Enum):
    OUT_OF_DOMAIN = "out-of-domain"

    def __repr__(self) -> str:
        return "OUT_OF_DOMAIN"


OUT_OF_DOMAIN = OutOfDomain.OUT_OF_DOMAIN
BoundValue = Union[float, OutOfDomain]


class ThresholdSource(str, Enum):
    THM1 = "thm1"
    THM4 = "thm4"
    THM6 = "thm6"
    CONJECTURE = "conjecture"


class FrontModel(str, Enum):
    EXPONENTIAL = "exponential-front"
    POWERLAW = "powerlaw-front"
    POWERLAW_LR = "powerlaw-lr-front"


def _zeta_tail(s: float) -> float:
    """sum_{r>=1} r^-s, truncated at TAIL_CUTOFF plus the integral remainder."""
    r = np.arange(1, TAIL_CUTOFF + 1, dtype=float)
    return float(np.sum(r ** (-s)) + TAIL_CUTOFF ** (1.0 - s) / (s - 1.0))


def tail_constant(alpha: float, mode: NormMode | str = NormMode.OPERATOR) -> float:
    """2 sum r^(1-alpha) (operator) or 2 sqrt(sum r^(1-2 alpha)) (frobenius)."""
    if NormMode(mode) is NormMode.OPERATOR:
        if not alpha > 2:
            raise DomainError(f"operator tail constant needs alpha > 2, got {alpha}")
        return 2.0 * _zeta_tail(alpha - 1.0)
    if not alpha > 1:
        raise DomainError(f"frobenius tail constant needs alpha > 1, got {alpha}")
    return 2.0 * math.sqrt(_zeta_tail(2.0 * alpha - 1.0))


def g_alpha(t: float, r: float, alpha: float, p: Optional[BoundParams] = None) -> BoundValue:
    """Operator-norm light-cone tail; OUT_OF_DOMAIN outside the stated time window."""
    p = p or BoundParams()
    if not alpha > 2:
        raise DomainError(f"g_alpha needs alpha > 2, got {alpha}")
    if t < 0 or r <= 0:
        raise DomainError(f"g_alpha needs t >= 0 and r > 0, got t={t}, r={r}")
    if alpha > 3:
        if t > r / p.v:
            return OUT_OF_DOMAIN
        gap = r - p.v * t
        if gap == 0:
            return math.inf if t > 0 else 0.0
        return p.c_lr * t**2 * gap ** (1.0 - alpha)
    eps = p.epsilon
    scale = r ** (alpha - 2.0 - eps)
    if t > scale / p.v:
        return OUT_OF_DOMAIN
    return p.c_lr * (t / scale) ** ((alpha - 1.0) / (alpha - 2.0) - eps / 2.0)


def f_alpha(t: float, r: float, alpha: float, p: Optional[BoundParams] = None) -> float:
    """Frobenius light-cone tail, linear in t."""
    p = p or BoundParams()
    if not alpha > 1:
        raise DomainError(f"f_alpha needs alpha > 1, got {alpha}")
    if r < 2:
        raise DomainError(f"f_alpha needs r >= 2, got {r}")
    if t < 0:
        raise DomainError(f"f_alpha needs t >= 0, got {t}")
    if alpha > 2:
        shape = math.log(r) / r
    elif alpha == 2:
        shape = math.log(r) ** 2 / r
    else:
        shape = r ** (1.0 - alpha)
    return p.c_fb * t * shape


def _thm4_exponent(alpha: float, eps: float) -> float:
    a = alpha - 1.0 - eps * (alpha / 2.0 - 1.0)
    return a * (alpha - 2.0 - eps) / (2.0 * alpha - 3.0 - eps * (alpha / 2.0 - 1.0))


def zoo_exponent(alpha: float, eps: float, source: ThresholdSource | str = ThresholdSource.THM1) -> float:
    """Power of L in the selected threshold branch (log factors of thm6 excluded)."""
    source = ThresholdSource(source)
    if not alpha > 1:
        raise DomainError(f"thresholds need alpha > 1, got {alpha}")
    if source is ThresholdSource.THM1:
        if alpha >= 4:
            return 1.0
        if alpha > 3:
            return (alpha - 1.0) / 3.0
        if alpha > ALPHA_CRITICAL_EXACT:
            return (alpha - 2.0) * (alpha - 1.0) / (2.0 * alpha - 3.0) - eps
        if alpha >= 2:
            return 0.5 - eps
        return (alpha - 1.0) / 2.0
    if source is ThresholdSource.THM4:
        if not alpha > 2:
            raise DomainError(f"the Lieb-Robinson threshold needs alpha > 2, got {alpha}")
        if alpha >= 4:
            return 1.0
        if alpha > 3:
            return (alpha - 1.0) / 3.0
        return _thm4_exponent(alpha, eps)
    if source is ThresholdSource.THM6:
        return 0.5 if alpha >= 2 else (alpha - 1.0) / 2.0
    return 1.0 if alpha >= 2 else alpha - 1.0


def zoo_threshold(
    alpha: float,
    L: int,
    eps: Optional[float] = None,
    p: Optional[BoundParams] = None,
    source: ThresholdSource | str = ThresholdSource.THM1,
) -> float:
    """Evolution-time threshold below which U stays far from the shift."""
    p = p or BoundParams()
    eps = p.epsilon if eps is None else eps
    source = ThresholdSource(source)
    if L < 2:
        raise DomainError(f"thresholds need L >= 2, got {L}")
    if not 0 < eps < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {eps}")
    e = zoo_exponent(alpha, eps, source)
    C, Cp = p.c_threshold, p.c_prime
    if source is ThresholdSource.THM1:
        if ALPHA_CRITICAL_EXACT < alpha <= 3:
            return Cp * L**e
        return Cp * L**e - C
    if source is ThresholdSource.THM4:
        if alpha >= 4:
            return (L - C) / p.v
        return Cp * L**e / p.v
    if source is ThresholdSource.THM6:
        if alpha > 2:
            return p.c_fb_threshold * math.sqrt(L / math.log(L))
        if alpha == 2:
            return p.c_fb_threshold * math.sqrt(L / math.log(L) ** 2)
        return p.c_fb_threshold * L**e
    return conjecture_threshold(alpha, L, p)


def conjecture_threshold(alpha: float, L: int, p: Optional[BoundParams] = None) -> float:
    p = p or BoundParams()
    if not alpha > 1:
        raise DomainError(f"thresholds need alpha > 1, got {alpha}")
    e = 1.0 if alpha >= 2 else alpha - 1.0
    return p.c_prime * L**e - p.c_threshold


def crossover_residual(alpha: float, eps: float = 0.0, eps_prime: float = 0.0) -> float:
    return _thm4_exponent(alpha, eps) - (0.5 - eps_prime)


def critical_alpha(eps: float = 0.0, eps_prime: float = 0.0) -> float:
    """Root in (2, 3) where the Lieb-Robinson and Frobenius thresholds coincide."""
    lo, hi = 2.0 + 1e-12, 3.0
    f_lo, f_hi = crossover_residual(lo, eps, eps_prime), crossover_residual(hi, eps, eps_prime)
    if f_lo * f_hi > 0:
        raise DomainError(f"no sign change of the crossover equation on (2, 3) for eps={eps}")
    return float(optimize.bisect(crossover_residual, lo, hi, args=(eps, eps_prime), xtol=CRITICAL_XTOL))


def lemma1_constant(p: BoundParams) -> float:
    return 1.0 + math.log(16.0 * p.c_lr / (p.mu * p.v))


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def loglinear_fit(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Least squares of log(y) against x."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2 or np.any(y <= 0) or np.ptp(x) == 0:
        raise FitError("log-linear fit needs >= 2 distinct x and positive y")
    res = stats.linregress(x, np.log(y))
    return LinearFit(float(res.slope), float(res.intercept), float(res.rvalue**2))


@dataclass(frozen=True, eq=False)
class FitReport(Certificate):
    name = "fit-front"

    model: FrontModel
    n_points: int
    residual_rms: float
    inflation: float
    max_ratio: float
    params: BoundParams = unreported()

    def checks(self) -> Dict[str, bool]:
        return {"fitted bound majorizes scan": self.max_ratio <= 1.0 + TOL.certificate}

    def to_dict(self) -> Dict[str, object]:
        out = super().to_dict()
        out["params"] = self.params.model_dump()
        return out


def _scan_points(scan) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    tgrid = np.asarray(scan.tgrid, float)
    grid = np.asarray(scan.grid, float)
    vals = np.asarray(scan.values, float)
    T, R = np.meshgrid(tgrid, grid, indexing="ij")
    return T.ravel(), R.ravel(), vals.ravel()


def _require_spread(t: np.ndarray, r: np.ndarray) -> None:
    if len(np.unique(r)) < 3 or len(np.unique(t)) < 3:
        raise FitError("fit needs >= 3 distinct distances and >= 3 times with nonzero data")


def fit_front(
    scan,
    model: FrontModel | str = FrontModel.EXPONENTIAL,
    alpha: Optional[float] = None,
    p: Optional[BoundParams] = None,
) -> FitReport:
    """Fit constants of a light-cone form to a scan, then inflate them until the form
    majorizes every scanned point."""
    model = FrontModel(model)
    p = p or BoundParams()
    t, r, y = _scan_points(scan)
    live = y > FIT_FLOOR
    if model is not FrontModel.EXPONENTIAL:
        if alpha is None:
            raise FitError(f"{model.value} needs alpha")
    if model is FrontModel.POWERLAW:
        live &= r >= 2
    _require_spread(t[live], r[live])

    if model is FrontModel.EXPONENTIAL:
        # log y = log c + mu v t - mu r
        A = np.column_stack([np.ones(live.sum()), t[live], -r[live]])
        coef, *_ = np.linalg.lstsq(A, np.log(y[live]), rcond=None)
        mu = float(coef[2])
        if not mu > 0 or not coef[1] > 0:
            raise FitError(f"exponential front fit gave mu={mu:.3g}, mu*v={coef[1]:.3g}")
        v = float(coef[1]) / mu
        c = float(np.exp(coef[0]))
        shape = np.exp(mu * (v * t - r))
        resid = np.log(y[live]) - A @ coef
        ratio = float(np.max(y / (c * shape)))
        inflation = max(1.0, ratio) * INFLATE
        fitted = p.model_copy(update=dict(c_lr=c * inflation, mu=mu, v=v, source="fitted"))
        final = y / (fitted.c_lr * shape)
    elif model is FrontModel.POWERLAW:
        # f_alpha is only stated for r >= 2
        sel = r >= 2
        ys = y[sel]
        shape = np.array([f_alpha(tt, rr, alpha, BoundParams()) for tt, rr in zip(t[sel], r[sel])])
        use = (ys > FIT_FLOOR) & (shape > 0)
        if not use.any():
            raise FitError("no scan point has a nonzero Frobenius-front shape")
        ratios = ys[use] / shape[use]
        c = float(np.max(ratios)) * INFLATE
        resid = np.log(ratios / np.mean(ratios))
        fitted = p.model_copy(update=dict(c_fb=c, source="fitted"))
        inflation = INFLATE
        with np.errstate(divide="ignore", invalid="ignore"):
            final = np.where(shape > 0, ys / (c * shape), np.where(ys > FIT_FLOOR, np.inf, 0.0))
    else:
        fitted, inflation, resid, final = _fit_lr_powerlaw(t, r, y, live, alpha, p)
    report = FitReport(
        model=model,
        n_points=int(live.sum()),
        residual_rms=float(np.sqrt(np.mean(np.square(resid)))) if np.size(resid) else 0.0,
        inflation=float(inflation),
        max_ratio=float(np.max(final)) if np.size(final) else 0.0,
        params=fitted,
    )
    log.info("fit %s: %s", model.value, fitted.model_dump(include={"c_lr", "mu", "v", "c_fb"}))
    return report


def _fit_lr_powerlaw(t, r, y, live, alpha, p):
    """Grid search over v inside the window where every scanned point is in domain."""
    if not alpha > 2:
        raise FitError(f"powerlaw-lr-front needs alpha > 2, got {alpha}")
    pos = live & (t > 0) & (r > 0)
    if alpha > 3:
        v_max = float(np.min(r[pos] / t[pos]))
    else:
        v_max = float(np.min(r[pos] ** (alpha - 2.0 - p.epsilon) / t[pos]))
    best = None
    for frac in np.linspace(0.05, 0.995, 190):
        trial = p.model_copy(update=dict(c_lr=1.0, v=frac * v_max))
        shape = np.array([g_alpha(tt, rr, alpha, trial) for tt, rr in zip(t[pos], r[pos])], dtype=float)
        c = float(np.max(y[pos] / shape))
        if best is None or c < best[0]:
            best = (c, trial.v, shape)
    c, v, shape = best
    c *= INFLATE
    fitted = p.model_copy(update=dict(c_lr=c, v=v, source="fitted"))
    ratios = y[pos] / shape
    return fitted, INFLATE, np.log(ratios / np.max(ratios)), y[pos] / (c * shape)


def threshold_table(
    alphas: Iterable[float],
    Ls: Iterable[int],
    p: Optional[BoundParams] = None,
    sources: Sequence[ThresholdSource | str] = ("thm1", "thm4", "thm6"),
    conjecture: bool = True,
) -> List[Dict[str, object]]:
    """Rows (alpha, L, source, T_threshold); a source undefined at some alpha is skipped."""
    p = p or BoundParams()
    srcs = [ThresholdSource(s) for s in sources]
    if conjecture:
        srcs.append(ThresholdSource.CONJECTURE)
    rows = []
    for alpha in alphas:
        for L in Ls:
            for src in srcs:
                try:
                    value = zoo_threshold(alpha, L, None, p, src)
                except DomainError:
                    continue
                rows.append({"alpha": float(alpha), "L": int(L), "source": src.value, "T_threshold": value})
    return rows
