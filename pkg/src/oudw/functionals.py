"""Path functionals behind the estimators.

dt-integrals use the trapezoid rule on the path grid. Stochastic integrals
are never summed on the grid: the unit diffusion gives
``int X dX = (X_T^2 - T) / 2`` exactly, and ``dSigma = X dt`` gives
``int Sigma dX = Sigma_T X_T - S_T`` by parts.

All helpers act on the last axis so a stack of paths can be processed in one
call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from oudw.sde import SamplePath


def trapezoid(f: np.ndarray, step: float) -> np.ndarray:
    return step * (f.sum(axis=-1) - 0.5 * (f[..., 0] + f[..., -1]))


def cumulative_trapezoid(f: np.ndarray, step: float) -> np.ndarray:
    out = np.zeros_like(f, dtype=float)
    np.cumsum(0.5 * step * (f[..., 1:] + f[..., :-1]), axis=-1, out=out[..., 1:])
    return out


def cumulative_sigma(path: SamplePath) -> np.ndarray:
    """Running integral Sigma_t of X at every grid point (Sigma_0 = 0)."""
    return cumulative_trapezoid(path.x, path.step)


def ito_xdx(x_terminal, horizon):
    """int_0^T X dX for a unit-diffusion process started at 0."""
    return 0.5 * (x_terminal * x_terminal - horizon)


@dataclass(frozen=True)
class SufficientStats:
    horizon: float
    s_t: float
    sigma_T: float
    pi_T: float
    x_T: float
    v_hat_T: float
    l_hat_T: float
    gram: np.ndarray
    rhs: np.ndarray


def sufficient_stats(path: SamplePath, theta_hat: float) -> SufficientStats:
    """Statistics of ``path`` given the drift estimate used for the residuals.

    The residual path is ``V_hat = X - theta_hat * Sigma``. ``gram`` is the
    integral of ``Phi Phi'`` and ``rhs`` the integral of ``Phi dX`` with
    ``Phi = (X, Sigma)``.
    """
    if not np.isfinite(theta_hat):
        raise ValueError(f"theta_hat must be finite, got {theta_hat}")
    h, T = path.step, path.horizon
    x = path.x
    sigma = cumulative_trapezoid(x, h)
    v_hat = x - theta_hat * sigma
    s_t = float(trapezoid(x * x, h))
    cross = float(trapezoid(x * sigma, h))
    sigma_sq = float(trapezoid(sigma * sigma, h))
    gram = np.array([[s_t, cross], [cross, sigma_sq]])
    x_T, sigma_T = float(x[-1]), float(sigma[-1])
    rhs = np.array([ito_xdx(x_T, T), sigma_T * x_T - s_t])
    return SufficientStats(
        horizon=T,
        s_t=s_t,
        sigma_T=sigma_T,
        pi_T=float(trapezoid(sigma, h)),
        x_T=x_T,
        v_hat_T=float(v_hat[-1]),
        l_hat_T=float(trapezoid(v_hat * v_hat, h)),
        gram=gram,
        rhs=rhs,
    )
