"""Maximum likelihood estimators and the continuous-time Durbin-Watson statistic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from oudw.errors import DegeneratePathError, SingularGramError
from oudw.functionals import (
    SufficientStats,
    cumulative_trapezoid,
    ito_xdx,
    sufficient_stats,
    trapezoid,
)
from oudw.sde import SamplePath

_TINY = 1e-300
_MAX_COND = 1e12


@dataclass(frozen=True)
class EstimationResult:
    theta_hat: float
    rho_hat: float
    dw: float
    stats: SufficientStats

    @property
    def horizon(self) -> float:
        return self.stats.horizon


@dataclass(frozen=True)
class VarthetaResult:
    """Estimate of ``(theta + rho, -theta * rho)`` from the second-order form."""

    vartheta_hat: np.ndarray

    @property
    def sum_hat(self) -> float:
        return float(self.vartheta_hat[0])

    @property
    def product_hat(self) -> float:
        return float(self.vartheta_hat[1])


def drift_ratio(terminal, integral, horizon):
    """``(Y_T^2 - T) / (2 int Y^2 dt)``, the MLE form shared by theta and rho."""
    integral = np.asarray(integral, dtype=float)
    if np.any(integral < _TINY):
        raise DegeneratePathError(
            f"integral of the squared path is {np.min(integral):.3g}; estimator undefined"
        )
    out = ito_xdx(terminal, horizon) / integral
    return float(out) if np.ndim(out) == 0 else out


def estimate_theta(path: SamplePath) -> float:
    """theta_hat = (X_T^2 - T) / (2 S_T)."""
    s_t = trapezoid(path.x * path.x, path.step)
    return drift_ratio(path.x[-1], s_t, path.horizon)


def durbin_watson(rho_hat):
    return 2.0 * (1.0 - rho_hat)


def estimate_rho(path: SamplePath) -> tuple[float, float]:
    """Residual-based estimate of rho; returns ``(rho_hat, theta_hat)``.

    Residuals use the full-sample ``theta_hat``:
    ``V_hat_t = X_t - theta_hat * Sigma_t``.
    """
    theta_hat = estimate_theta(path)
    sigma = cumulative_trapezoid(path.x, path.step)
    v_hat = path.x - theta_hat * sigma
    l_hat = trapezoid(v_hat * v_hat, path.step)
    return drift_ratio(v_hat[-1], l_hat, path.horizon), theta_hat


def estimate(path: SamplePath) -> EstimationResult:
    theta_hat = estimate_theta(path)
    stats = sufficient_stats(path, theta_hat)
    rho_hat = drift_ratio(stats.v_hat_T, stats.l_hat_T, stats.horizon)
    return EstimationResult(theta_hat, rho_hat, durbin_watson(rho_hat), stats)


def solve_gram(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Closed-form solve of the 2x2 system with a condition number guard.

    Accepts stacks: ``gram`` of shape (..., 2, 2) and ``rhs`` of shape (..., 2).
    """
    a, b, d = gram[..., 0, 0], gram[..., 0, 1], gram[..., 1, 1]
    det = a * d - b * b
    # 2-norm condition number of a symmetric 2x2 matrix from its eigenvalues
    mean, half_gap = 0.5 * (a + d), np.sqrt(0.25 * (a - d) ** 2 + b * b)
    lam_max, lam_min = mean + half_gap, mean - half_gap
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(lam_min > 0, lam_max / lam_min, np.inf)
    if np.any(~(cond < _MAX_COND)) or np.any(~(det > 0)):
        raise SingularGramError(
            f"Gram matrix is singular or ill-conditioned (cond={np.max(cond):.3g})"
        )
    r0, r1 = rhs[..., 0], rhs[..., 1]
    return np.stack([(d * r0 - b * r1) / det, (a * r1 - b * r0) / det], axis=-1)


def estimate_vartheta(path: SamplePath) -> VarthetaResult:
    """MLE of ``(theta + rho, -theta * rho)`` regressing dX on (X, Sigma)."""
    stats = sufficient_stats(path, 0.0)
    return VarthetaResult(solve_gram(stats.gram, stats.rhs))
