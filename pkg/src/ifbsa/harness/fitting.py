"""Sinusoidal fringe fitting and background subtraction.

The model R(1 + V cos(phi + rho)) is linear in disguise:

    y = a + b cos(phi) + c sin(phi),  R = a,  V = sqrt(b^2 + c^2)/a,  rho = atan2(-c, b)

so a weighted linear least-squares solve is exact and needs no starting
point. Uncertainties are 1 sigma, propagated to first order from the
covariance of (a, b, c).
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ifbsa.errors import DegenerateDesign, GridMismatch

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class FringeFit:
    R: float
    V: float
    rho: float
    R_err: float
    V_err: float
    rho_err: float
    chi2_dof: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)

    def model(self, phi):
        return self.R * (1 + self.V * np.cos(np.asarray(phi) + self.rho))


def _design(phi: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])


def _solve(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xw = x * w[:, None]
    normal = x.T @ xw
    if np.linalg.matrix_rank(normal) < 3:
        raise DegenerateDesign("phase grid does not determine offset, cosine and sine terms")
    cov = np.linalg.inv(normal)
    return cov @ (xw.T @ y), cov


def fit_fringe(points: Sequence[tuple[float, float]], sigma: Sequence[float] | None = None) -> FringeFit:
    """Fit (phase, count) points.

    Without ``sigma`` the counts are treated as Poisson: a first unweighted
    pass gives the model, whose values (floored at 1) become the variances
    of a second weighted pass.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 5:
        raise DegenerateDesign("need at least 5 points")
    phi, y = pts[:, 0], pts[:, 1]
    x = _design(phi)
    if sigma is None:
        coef, _ = _solve(x, y, np.ones_like(y))
        var = np.maximum(x @ coef, 1.0)
    else:
        var = np.asarray(sigma, dtype=float) ** 2
        if var.shape != y.shape or np.any(var <= 0):
            raise ValueError("sigma must be positive, one per point")
    coef, cov = _solve(x, y, 1 / var)
    a, b, c = coef
    resid = y - x @ coef
    dof = max(len(y) - 3, 1)
    chi2 = float(np.sum(resid**2 / var)) / dof

    amp = math.hypot(b, c)
    if a == 0:
        raise DegenerateDesign("zero mean count")
    v = amp / a
    rho = math.atan2(-c, b) % TWO_PI
    if rho >= TWO_PI:  # -tiny % 2pi rounds up to 2pi
        rho = 0.0
    # Jacobians of V and rho with respect to (a, b, c)
    if amp > 0:
        jv = np.array([-amp / a**2, b / (a * amp), c / (a * amp)])
        jr = np.array([0.0, c / amp**2, -b / amp**2])
        v_err = math.sqrt(max(jv @ cov @ jv, 0.0))
        rho_err = math.sqrt(max(jr @ cov @ jr, 0.0))
    else:
        v_err = math.sqrt(max(cov[1, 1] + cov[2, 2], 0.0) / 2) / abs(a)
        rho_err = math.pi
    return FringeFit(float(a), float(v), float(rho), math.sqrt(cov[0, 0]), float(v_err), float(rho_err), chi2, len(y))


@dataclass(frozen=True)
class Subtraction:
    points: list[tuple[float, float]]
    fit: FringeFit
    clamped: bool


def noise_subtract(
    raw: Sequence[tuple[float, float]],
    background: Sequence[tuple[float, float]],
    atol: float = 1e-9,
) -> Subtraction:
    """Subtract a background scan point by point and refit.

    Both inputs are Poisson counts, so the per-point variance is the sum of
    the two. Negative net counts are clamped to zero and flagged.
    """
    if len(raw) != len(background) or any(abs(p - q) > atol for (p, _), (q, _) in zip(raw, background)):
        raise GridMismatch("raw and background phase grids differ")
    net = []
    sig = []
    clamped = False
    for (phi, r), (_, bg) in zip(raw, background):
        n = r - bg
        if n < 0:
            clamped = True
            n = 0.0
        net.append((phi, n))
        sig.append(math.sqrt(max(r, 1.0) + max(bg, 1.0)) if (r or bg) else 1.0)
    if clamped:
        logger.warning("net counts clamped at zero")
    return Subtraction(net, fit_fringe(net, sigma=sig), clamped)


def wrap(angle: float) -> float:
    """Map to (-pi, pi]."""
    a = math.remainder(angle, TWO_PI)
    return math.pi if a == -math.pi else a
