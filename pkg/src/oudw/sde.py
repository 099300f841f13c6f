"""Exact simulation of the OU-driven-by-OU system.

The state ``(X, V)`` solves the linear SDE

    dX = theta X dt + rho V dt + dW
    dV = rho V dt + dW

with one Brownian motion ``W`` driving both rows, so the drift matrix is
``A = [[theta, rho], [0, rho]]`` and the noise loading is ``b = (1, 1)``.
Over a step ``h`` the state moves by the Gaussian transition
``Y_{k+1} = e^{Ah} Y_k + eps_k`` with ``eps_k ~ N(0, Q(h))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammainc

from oudw import rng

# below this value of |delta| * h the divided differences switch to series
_SERIES_BAND = 0.05
# below this value of |a| * h the exponential moments switch to series
_MOMENT_SERIES_BAND = 0.5
_GRID_RTOL = 1e-9
_BATCH_BUDGET = 4_000_000


@dataclass(frozen=True)
class ModelParams:
    """Drift rates ``theta < 0`` of X and ``rho <= 0`` of V."""

    theta: float
    rho: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.rho)):
            raise ValueError("theta and rho must be finite")
        if not self.theta < 0:
            raise ValueError(f"theta must be < 0, got {self.theta}")
        if not self.rho <= 0:
            raise ValueError(f"rho must be <= 0, got {self.rho}")

    @property
    def drift(self) -> np.ndarray:
        return np.array([[self.theta, self.rho], [0.0, self.rho]])


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Joint trajectory of (X, V) on the uniform grid ``t_i = i * step``."""

    step: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be > 0, got {self.step}")
        if x.ndim != 1 or v.ndim != 1 or x.shape != v.shape:
            raise ValueError("x and v must be 1-d arrays of equal length")
        if x.size < 2:
            raise ValueError("a path needs at least two grid points")
        if x[0] != 0.0 or v[0] != 0.0:
            raise ValueError("paths start at X_0 = V_0 = 0")

    @property
    def n(self) -> int:
        return self.x.size - 1

    @property
    def horizon(self) -> float:
        return self.n * self.step

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.step


@dataclass(frozen=True)
class TransitionLaw:
    mean_propagator: np.ndarray
    noise_cov: np.ndarray


def _phi1(z: float) -> float:
    return 1.0 if z == 0.0 else math.expm1(z) / z


def _exp_integral(lam: float, h: float) -> float:
    """int_0^h exp(lam s) ds"""
    return h * _phi1(lam * h)


def _exp_moment(n: int, a: float, h: float) -> float:
    """int_0^h s^n exp(a s) ds"""
    if a == 0.0:
        return h ** (n + 1) / (n + 1)
    ah = a * h
    if abs(ah) < _MOMENT_SERIES_BAND:
        total, term, k = 0.0, 1.0, 0
        while True:
            contrib = term / (n + k + 1)
            total += contrib
            if abs(contrib) < 1e-18 * abs(total) or k > 60:
                break
            k += 1
            term *= ah / k
        return h ** (n + 1) * total
    if a < 0:
        return math.factorial(n) / (-a) ** (n + 1) * float(gammainc(n + 1, -ah))
    value = math.expm1(ah) / a
    for k in range(1, n + 1):
        value = (h**k * math.exp(ah) - k * value) / a
    return value


def _first_difference(a: float, delta: float, h: float) -> float:
    """int_0^h exp(a s) (exp(delta s) - 1) / delta ds"""
    if abs(delta) * h >= _SERIES_BAND:
        return (_exp_integral(a + delta, h) - _exp_integral(a, h)) / delta
    total = 0.0
    for n in range(1, 40):
        term = delta ** (n - 1) * _exp_moment(n, a, h) / math.factorial(n)
        total += term
        if abs(term) <= 1e-18 * abs(total):
            break
    return total


def _second_difference(a: float, delta: float, h: float) -> float:
    """int_0^h exp(a s) ((exp(delta s) - 1) / delta)^2 ds"""
    if abs(delta) * h >= _SERIES_BAND:
        e0 = _exp_integral(a, h)
        e1 = _exp_integral(a + delta, h)
        e2 = _exp_integral(a + 2 * delta, h)
        return ((e2 - e1) - (e1 - e0)) / delta**2
    # (e^z - 1)^2 = sum_{n>=2} (2^n - 2) z^n / n!
    total = 0.0
    for n in range(2, 40):
        coef = (2.0**n - 2.0) / math.factorial(n)
        term = coef * delta ** (n - 2) * _exp_moment(n, a, h)
        total += term
        if abs(term) <= 1e-18 * abs(total):
            break
    return total


def _check_step(h: float) -> float:
    h = float(h)
    if not (h >= 0 and math.isfinite(h)):
        raise ValueError(f"step must be finite and >= 0, got {h}")
    return h


def transition_matrix(params: ModelParams, h: float) -> np.ndarray:
    """Mean propagator exp(A h) of the joint state (X, V)."""
    h = _check_step(h)
    theta, rho = params.theta, params.rho
    delta = rho - theta
    e_theta = math.exp(theta * h)
    # rho (e^{rho h} - e^{theta h}) / (rho - theta), written with expm1
    upper = rho * e_theta * h * _phi1(delta * h)
    return np.array([[e_theta, upper], [0.0, math.exp(rho * h)]])


def transition_covariance(params: ModelParams, h: float) -> np.ndarray:
    """Covariance Q(h) = int_0^h e^{As} b b' e^{A's} ds of one exact step.

    Evaluated in closed form through first and second divided differences of
    ``lam -> int_0^h e^{lam s} ds``. Near the confluent case
    ``theta == rho`` those differences are summed as series in
    ``rho - theta``, which keeps full precision through the confluent point.
    """
    h = _check_step(h)
    theta, rho = params.theta, params.rho
    delta = rho - theta
    q22 = _exp_integral(2 * rho, h)
    q12 = _exp_integral(theta + rho, h) + rho * _first_difference(theta + rho, delta, h)
    q11 = (
        _exp_integral(2 * theta, h)
        + 2 * rho * _first_difference(2 * theta, delta, h)
        + rho**2 * _second_difference(2 * theta, delta, h)
    )
    return np.array([[q11, q12], [q12, q22]])


def transition_law(params: ModelParams, h: float) -> TransitionLaw:
    return TransitionLaw(transition_matrix(params, h), transition_covariance(params, h))


def stationary_covariance(params: ModelParams) -> np.ndarray:
    """Solution of A Q + Q A' + b b' = 0; requires rho < 0."""
    if params.rho == 0:
        raise ValueError("V has no stationary law when rho = 0")
    var_x = -1.0 / (2.0 * (params.theta + params.rho))
    var_v = -1.0 / (2.0 * params.rho)
    return np.array([[var_x, var_x], [var_x, var_v]])


def stationary_moments(params: ModelParams) -> tuple[float, float | None, float | None]:
    """Limiting ``(Var X, Var V, Cov(X, V))``.

    With ``rho = 0`` the driving noise is a Brownian motion and the pair has
    no joint stationary law: ``Var V`` and ``Cov(X, V)`` come back as
    ``None`` while X keeps its stationary variance.
    """
    var_x = -1.0 / (2.0 * (params.theta + params.rho))
    if params.rho == 0:
        return var_x, None, None
    return var_x, -1.0 / (2.0 * params.rho), var_x


def companion_matrix(params: ModelParams) -> np.ndarray:
    """Drift of (X, Sigma) where Sigma is the running integral of X."""
    theta, rho = params.theta, params.rho
    return np.array([[theta + rho, -theta * rho], [1.0, 0.0]])


def grid_size(horizon: float, step: float) -> int:
    """Number of steps n with n * step == horizon up to relative 1e-9."""
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be > 0, got {horizon}")
    if not (math.isfinite(step) and step > 0):
        raise ValueError(f"step must be > 0, got {step}")
    if step > horizon * (1 + _GRID_RTOL):
        raise ValueError(f"step {step} exceeds horizon {horizon}")
    n = round(horizon / step)
    if n < 1 or abs(n * step - horizon) > _GRID_RTOL * horizon:
        raise ValueError(f"horizon {horizon} is not an integer multiple of step {step}")
    return n


def _batches(indices: Sequence[int], n: int) -> Iterable[Sequence[int]]:
    size = max(1, _BATCH_BUDGET // (2 * n))
    for start in range(0, len(indices), size):
        yield indices[start : start + size]


def _normals(seed: int, indices: Sequence[int], n: int) -> np.ndarray:
    """Standard normals of shape (2, len(indices), n), one stream per index."""
    z = np.empty((2, len(indices), n))
    for row, idx in enumerate(indices):
        z[:, row, :] = rng.stream(seed, idx, rng.PATHS).standard_normal((2, n))
    return z


def simulate_exact_batch(
    params: ModelParams,
    horizon: float,
    step: float,
    seed: int,
    indices: Sequence[int],
) -> tuple[np.ndarray, np.ndarray]:
    """Exact paths for each stream index; arrays of shape (len(indices), n + 1)."""
    n = grid_size(horizon, step)
    indices = list(indices)
    law = transition_law(params, step)
    m = law.mean_propagator
    chol = np.linalg.cholesky(law.noise_cov)
    x = np.zeros((len(indices), n + 1))
    v = np.zeros((len(indices), n + 1))
    row = 0
    for chunk in _batches(indices, n):
        z = _normals(seed, chunk, n)
        eps_x = chol[0, 0] * z[0]
        eps_v = chol[1, 0] * z[0] + chol[1, 1] * z[1]
        vv = lfilter([1.0], [1.0, -m[1, 1]], eps_v, axis=-1)
        drive = eps_x
        drive[:, 1:] += m[0, 1] * vv[:, :-1]
        xx = lfilter([1.0], [1.0, -m[0, 0]], drive, axis=-1)
        k = len(chunk)
        x[row : row + k, 1:] = xx
        v[row : row + k, 1:] = vv
        row += k
    return x, v


def simulate_exact(params: ModelParams, horizon: float, step: float, seed: int) -> SamplePath:
    """One path from the exact Gaussian transition, stream ``(seed, 0)``."""
    x, v = simulate_exact_batch(params, horizon, step, seed, [0])
    return SamplePath(step=float(horizon) / grid_size(horizon, step), x=x[0], v=v[0])


def simulate_euler_batch(
    params: ModelParams,
    horizon: float,
    step: float,
    seed: int,
    indices: Sequence[int],
) -> tuple[np.ndarray, np.ndarray]:
    """Euler-Maruyama paths sharing one Brownian increment per step per path."""
    n = grid_size(horizon, step)
    h = float(horizon) / n
    indices = list(indices)
    x = np.zeros((len(indices), n + 1))
    v = np.zeros((len(indices), n + 1))
    row = 0
    for chunk in _batches(indices, n):
        dw = math.sqrt(h) * _normals(seed, chunk, n)[0]
        vv = lfilter([1.0], [1.0, -(1.0 + params.rho * h)], dw, axis=-1)
        drive = dw.copy()
        drive[:, 1:] += params.rho * h * vv[:, :-1]
        xx = lfilter([1.0], [1.0, -(1.0 + params.theta * h)], drive, axis=-1)
        k = len(chunk)
        x[row : row + k, 1:] = xx
        v[row : row + k, 1:] = vv
        row += k
    return x, v


def simulate_euler(params: ModelParams, horizon: float, step: float, seed: int) -> SamplePath:
    x, v = simulate_euler_batch(params, horizon, step, seed, [0])
    return SamplePath(step=float(horizon) / grid_size(horizon, step), x=x[0], v=v[0])


def laplace_check(u: float, paths: int, steps: int, seed: int) -> tuple[float, float, float]:
    """Monte Carlo E[exp(-u int_0^1 B^2 ds)] against 1 / sqrt(cosh(sqrt(2u))).

    Returns ``(mc_estimate, closed_form, std_error)``; the integral is the
    trapezoid rule on ``steps`` equal subintervals of [0, 1].
    """
    if not u >= 0:
        raise ValueError(f"u must be >= 0, got {u}")
    if paths < 1:
        raise ValueError(f"paths must be >= 1, got {paths}")
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    closed = 1.0 / math.sqrt(math.cosh(math.sqrt(2.0 * u)))
    h = 1.0 / steps
    values = np.empty(paths)
    chunk = max(1, _BATCH_BUDGET // steps)
    for c, start in enumerate(range(0, paths, chunk)):
        k = min(chunk, paths - start)
        g = rng.stream(seed, c, rng.LAPLACE)
        b = np.cumsum(math.sqrt(h) * g.standard_normal((k, steps)), axis=1)
        b2 = b * b
        integral = h * (b2.sum(axis=1) - 0.5 * b2[:, -1])
        values[start : start + k] = np.exp(-u * integral)
    se = float(values.std(ddof=1) / math.sqrt(paths)) if paths > 1 else math.nan
    return float(values.mean()), closed, se
