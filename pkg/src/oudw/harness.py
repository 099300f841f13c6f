"""Monte Carlo replication of the limit theorems.

Replicate ``r`` of an experiment always uses random stream ``(seed, r)``, so a
summary depends only on the :class:`ExperimentSpec`, never on how the
replicates were split across worker threads.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from oudw import rng
from oudw.asymptotics import (
    WSamplerConfig,
    asymptotic_law,
    critical_value,
    sample_w,
)
from oudw.dw_test import z_from_rho
from oudw.estimators import durbin_watson, solve_gram
from oudw.errors import SingularGramError
from oudw.functionals import cumulative_trapezoid, ito_xdx, trapezoid
from oudw.sde import ModelParams, grid_size, simulate_exact_batch

log = logging.getLogger(__name__)

_CHUNK_BUDGET = 4_000_000
_TINY = 1e-300


@dataclass(frozen=True)
class ExperimentSpec:
    params: ModelParams
    horizon: float
    step: float
    replications: int
    seed: int = rng.DEFAULT_SEED
    alpha: float | None = None
    z_alpha: float | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        grid_size(self.horizon, self.step)
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.z_alpha is not None and not self.z_alpha >= 0:
            raise ValueError(f"z_alpha must be >= 0, got {self.z_alpha}")


_SPEC_KEYS = {
    "theta": float,
    "rho": float,
    "horizon": float,
    "step": float,
    "replications": int,
    "seed": int,
    "alpha": float,
    "z_alpha": float,
}


def parse_spec(text: str) -> ExperimentSpec:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SPEC_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _SPEC_KEYS[key](value)
        except ValueError:
            raise ValueError(f"line {lineno}: {key} must be {_SPEC_KEYS[key].__name__}, got {value!r}")
    missing = {"theta", "rho", "horizon", "step", "replications"} - values.keys()
    if missing:
        raise ValueError(f"missing keys: {', '.join(sorted(missing))}")
    params = ModelParams(values.pop("theta"), values.pop("rho"))
    values.setdefault("seed", rng.default_seed())
    return ExperimentSpec(params=params, **values)


def load_spec(path: str | Path) -> ExperimentSpec:
    return parse_spec(Path(path).read_text())


def estimate_batch(x: np.ndarray, step: float) -> dict[str, np.ndarray]:
    """Estimates for a stack of X paths (rows). Failed rows hold NaN."""
    T = step * (x.shape[-1] - 1)
    x_T = x[:, -1]
    s_t = trapezoid(x * x, step)
    bad = s_t < _TINY
    with np.errstate(divide="ignore", invalid="ignore"):
        theta_hat = np.where(bad, np.nan, ito_xdx(x_T, T) / s_t)
        sigma = cumulative_trapezoid(x, step)
        v_hat = x - np.nan_to_num(theta_hat)[:, None] * sigma
        l_hat = trapezoid(v_hat * v_hat, step)
        bad |= l_hat < _TINY
        rho_hat = np.where(bad, np.nan, ito_xdx(v_hat[:, -1], T) / l_hat)
    cross = trapezoid(x * sigma, step)
    sig2 = trapezoid(sigma * sigma, step)
    gram = np.empty((x.shape[0], 2, 2))
    gram[:, 0, 0], gram[:, 0, 1], gram[:, 1, 0], gram[:, 1, 1] = s_t, cross, cross, sig2
    rhs = np.stack([ito_xdx(x_T, T), sigma[:, -1] * x_T - s_t], axis=-1)
    vartheta = np.full((x.shape[0], 2), np.nan)
    for i in range(x.shape[0]):
        try:
            vartheta[i] = solve_gram(gram[i], rhs[i])
        except SingularGramError:
            bad[i] = True
    dw = durbin_watson(rho_hat)
    return {
        "theta_hat": theta_hat,
        "rho_hat": rho_hat,
        "dw": dw,
        "z_stat": z_from_rho(T, rho_hat),
        "vartheta": vartheta,
        "failed": bad,
    }


def run_replicates(
    params: ModelParams,
    horizon: float,
    step: float,
    replications: int,
    seed: int,
    threads: int = 1,
) -> dict[str, np.ndarray]:
    """Simulate and estimate ``replications`` paths; arrays indexed by replicate."""
    n = grid_size(horizon, step)
    h = float(horizon) / n
    size = max(1, _CHUNK_BUDGET // (n + 1))
    chunks = [range(s, min(s + size, replications)) for s in range(0, replications, size)]

    def work(idx: range) -> dict[str, np.ndarray]:
        x, _ = simulate_exact_batch(params, horizon, step, seed, idx)
        return estimate_batch(x, h)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}


def _var(a: np.ndarray) -> float | None:
    return float(np.var(a, ddof=1)) if a.size > 1 else None


def _se(a: np.ndarray) -> float | None:
    return float(np.std(a, ddof=1) / math.sqrt(a.size)) if a.size > 1 else None


def _moments(scaled: np.ndarray, variance: float | None) -> dict:
    out = {
        "mean": float(np.mean(scaled)),
        "var": _var(scaled),
        "skewness": None,
        "excess_kurtosis": None,
        "ks_distance": None,
    }
    if scaled.size > 2:
        out["skewness"] = float(stats.skew(scaled))
        out["excess_kurtosis"] = float(stats.kurtosis(scaled))
    if variance is not None and variance > 0:
        out["ks_distance"] = float(stats.kstest(scaled, "norm", args=(0.0, math.sqrt(variance))).statistic)
    return out


@dataclass
class ExperimentSummary:
    spec: ExperimentSpec
    replications: int
    failures: int
    theta_hat: dict
    rho_hat: dict
    dw: dict
    scaled_theta: dict
    scaled_rho: dict
    scaled_dw: dict
    scaled_cov: float | None
    vartheta: dict
    rejection: dict | None
    raw: dict | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        p = self.spec.params
        return {
            "theta": p.theta,
            "rho": p.rho,
            "horizon": self.spec.horizon,
            "step": self.spec.step,
            "seed": self.spec.seed,
            "replications": self.replications,
            "failures": self.failures,
            "theta_hat": self.theta_hat,
            "rho_hat": self.rho_hat,
            "dw": self.dw,
            "scaled_theta": self.scaled_theta,
            "scaled_rho": self.scaled_rho,
            "scaled_dw": self.scaled_dw,
            "scaled_cov": self.scaled_cov,
            "vartheta": self.vartheta,
            "rejection": self.rejection,
        }


def _location(a: np.ndarray, target: float) -> dict:
    se = _se(a)
    return {
        "mean": float(np.mean(a)),
        "se": se,
        "target": target,
        "z_score": (float(np.mean(a)) - target) / se if se else None,
    }


def replicate(spec: ExperimentSpec, threads: int = 1, keep_raw: bool = False) -> ExperimentSummary:
    """Run the experiment and summarise the estimator distributions.

    Targets come from the closed-form limits. With ``rho = 0`` the Gaussian
    limit laws do not apply and the variance targets are left empty.
    """
    raw = run_replicates(
        spec.params, spec.horizon, spec.step, spec.replications, spec.seed, threads
    )
    failed = raw["failed"]
    if failed.any():
        log.warning("%d of %d replicates were degenerate", failed.sum(), failed.size)
    ok = ~failed
    law = asymptotic_law(spec.params)
    root_t = math.sqrt(spec.horizon)
    theta_hat, rho_hat, dw = raw["theta_hat"][ok], raw["rho_hat"][ok], raw["dw"][ok]
    st = root_t * (theta_hat - law.theta_star)
    sr = root_t * (rho_hat - law.rho_star)
    sd = root_t * (dw - law.d_star)
    target_vt = np.array([spec.params.theta + spec.params.rho, -spec.params.theta * spec.params.rho])
    vt = raw["vartheta"][ok]
    svt = root_t * (vt - target_vt)
    vt_cov = np.cov(svt, rowvar=False) if svt.shape[0] > 1 else None
    vartheta = {
        "target": target_vt.tolist(),
        "mean": vt.mean(axis=0).tolist(),
        "se": [_se(vt[:, 0]), _se(vt[:, 1])],
        "scaled_cov": vt_cov.tolist() if vt_cov is not None else None,
        "target_cov": law.delta.tolist() if law.delta is not None else None,
        "correlation": float(vt_cov[0, 1] / math.sqrt(vt_cov[0, 0] * vt_cov[1, 1]))
        if vt_cov is not None
        else None,
    }
    rejection = None
    if spec.alpha is not None:
        z_alpha = spec.z_alpha if spec.z_alpha is not None else critical_value(spec.alpha)
        rejects = raw["z_stat"][ok] > z_alpha
        rate = float(rejects.mean())
        rejection = {
            "alpha": spec.alpha,
            "z_alpha": z_alpha,
            "rate": rate,
            "se": math.sqrt(rate * (1 - rate) / rejects.size),
        }
    scaled_cov = float(np.cov(st, sr)[0, 1]) if st.size > 1 else None
    st_summary = _moments(st, law.sigma_theta_sq)
    st_summary["target_var"] = law.sigma_theta_sq
    sr_summary = _moments(sr, law.sigma_rho_sq)
    sr_summary["target_var"] = law.sigma_rho_sq
    sd_summary = _moments(sd, law.sigma_d_sq)
    sd_summary["target_var"] = law.sigma_d_sq
    return ExperimentSummary(
        spec=spec,
        replications=int(ok.sum()),
        failures=int(failed.sum()),
        theta_hat=_location(theta_hat, law.theta_star),
        rho_hat=_location(rho_hat, law.rho_star),
        dw=_location(dw, law.d_star),
        scaled_theta=st_summary,
        scaled_rho=sr_summary,
        scaled_dw=sd_summary,
        scaled_cov=scaled_cov,
        vartheta=vartheta,
        rejection=rejection,
        raw=raw if keep_raw else None,
    )


def null_distribution_experiment(
    theta: float,
    horizon: float,
    step: float,
    R: int,
    seed: int,
    w_config: WSamplerConfig,
    threads: int = 1,
) -> tuple[float, float]:
    """Two-sample KS of ``T * rho_hat`` under rho = 0 against draws of W."""
    raw = run_replicates(ModelParams(theta, 0.0), horizon, step, R, seed, threads)
    scaled = horizon * raw["rho_hat"][~raw["failed"]]
    res = stats.ks_2samp(scaled, sample_w(w_config))
    return float(res.statistic), float(res.pvalue)


def level_power_experiment(
    theta: float,
    rho_grid: Sequence[float],
    horizon: float,
    step: float,
    R: int,
    alpha: float,
    z_alpha: float,
    seed: int,
    threads: int = 1,
) -> list[dict]:
    """Rejection rate per rho with binomial standard errors.

    Every grid point reuses the same streams, so neighbouring rates differ by
    the effect of rho rather than by independent sampling noise.
    """
    rows = []
    for rho in rho_grid:
        if rho > 0:
            raise ValueError(f"rho grid values must be <= 0, got {rho}")
        raw = run_replicates(ModelParams(theta, float(rho)), horizon, step, R, seed, threads)
        z = raw["z_stat"][~raw["failed"]]
        rate = float(np.mean(z > z_alpha))
        rows.append(
            {
                "rho": float(rho),
                "rate": rate,
                "se": math.sqrt(rate * (1 - rate) / z.size),
                "replications": int(z.size),
            }
        )
    return rows
