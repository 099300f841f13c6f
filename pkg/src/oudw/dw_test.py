"""Serial correlation test of H0: rho = 0 against H1: rho < 0.

Under H0 the statistic ``Z_T = T^2 (D_T - 2)^2`` converges in law to
``4 W^2``; under H1 it diverges. H0 is kept on ``[0, z_alpha]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from oudw.estimators import EstimationResult, estimate
from oudw.sde import SamplePath


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False  # not a pytest class

    z_statistic: float
    z_alpha: float
    alpha: float
    reject: bool
    estimates: EstimationResult

    def to_record(self) -> dict:
        return {
            "T": self.estimates.horizon,
            "theta_hat": self.estimates.theta_hat,
            "rho_hat": self.estimates.rho_hat,
            "dw": self.estimates.dw,
            "z_stat": self.z_statistic,
            "alpha": self.alpha,
            "z_alpha": self.z_alpha,
            "reject": self.reject,
        }


def z_statistic(T, dw):
    if not np.all(np.asarray(T) > 0):
        raise ValueError(f"T must be > 0, got {T}")
    return T**2 * (dw - 2.0) ** 2


def z_from_rho(T, rho_hat):
    """Same statistic through ``D - 2 = -2 rho_hat``.

    Avoids the cancellation in ``dw - 2`` when ``rho_hat`` is small, which is
    exactly the regime where the test decision is made.
    """
    return 4.0 * T**2 * rho_hat**2


def run_test(path: SamplePath, alpha: float, z_alpha: float) -> TestOutcome:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not z_alpha >= 0:
        raise ValueError(f"z_alpha must be >= 0, got {z_alpha}")
    est = estimate(path)
    z = z_from_rho(est.horizon, est.rho_hat)
    return TestOutcome(z, float(z_alpha), float(alpha), bool(z > z_alpha), est)
