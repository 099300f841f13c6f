import json

import numpy as np
import pytest

from oudw import ModelParams, WSamplerConfig, null_distribution_experiment, replicate
from oudw.harness import ExperimentSpec, load_spec, parse_spec, run_replicates
from oudw.io import dump_json

CONFIG = """
# reference experiment
theta = -2
rho = -1
horizon = 20
step = 0.01
replications = 500   # three chunks at this grid size
seed = 11
alpha = 0.05
"""


def test_parse_spec():
    spec = parse_spec(CONFIG)
    assert spec.params == ModelParams(-2.0, -1.0)
    assert (spec.horizon, spec.step, spec.replications, spec.seed, spec.alpha) == (20.0, 0.01, 500, 11, 0.05)
    assert spec.z_alpha is None


@pytest.mark.parametrize(
    "text,match",
    [
        ("theta = -1\nrho = 0\nhorizon = 1\nstep = 0.1", "replications"),
        (CONFIG + "colour = red\n", "unknown key"),
        (CONFIG + "just words\n", "key = value"),
        (CONFIG.replace("replications = 500", "replications = many"), "replications must be int"),
        (CONFIG.replace("rho = -1", "rho = 1"), "rho"),
        (CONFIG.replace("step = 0.01", "step = 0.3"), None),
        (CONFIG + "alpha = 2\n", "alpha"),
    ],
)
def test_parse_spec_errors(text, match):
    with pytest.raises(ValueError, match=match):
        parse_spec(text)


def test_seed_defaults_from_environment(monkeypatch):
    monkeypatch.setenv("OUDW_SEED", "99")
    text = "\n".join(line for line in CONFIG.splitlines() if not line.startswith("seed"))
    assert parse_spec(text).seed == 99


def test_load_spec(tmp_path):
    f = tmp_path / "exp.cfg"
    f.write_text(CONFIG)
    assert load_spec(f) == parse_spec(CONFIG)


def test_thread_count_does_not_change_results():
    a = run_replicates(ModelParams(-2.0, -1.0), 20.0, 0.01, 500, 11, threads=1)
    b = run_replicates(ModelParams(-2.0, -1.0), 20.0, 0.01, 500, 11, threads=3)
    for key in a:
        assert np.array_equal(a[key], b[key], equal_nan=True)


def test_prefix_stability():
    # replicate i depends only on (seed, i)
    a = run_replicates(ModelParams(-2.0, -1.0), 5.0, 0.01, 20, 3)
    b = run_replicates(ModelParams(-2.0, -1.0), 5.0, 0.01, 50, 3)
    assert np.array_equal(a["theta_hat"], b["theta_hat"][:20])


def test_summary_contents():
    summary = replicate(parse_spec(CONFIG), threads=2)
    d = json.loads(dump_json(summary.to_dict()))
    assert d["replications"] == 500 and d["failures"] == 0
    assert d["theta_hat"]["target"] == -3.0
    assert d["scaled_theta"]["target_var"] == 6.0
    assert 0 <= d["rejection"]["rate"] <= 1
    assert d["vartheta"]["target"] == [-3.0, -2.0]
    assert summary.raw is None


def test_single_replicate_has_no_spread():
    summary = replicate(ExperimentSpec(ModelParams(-2.0, -1.0), 5.0, 0.01, 1))
    assert summary.scaled_theta["var"] is None
    assert summary.theta_hat["se"] is None
    assert summary.vartheta["scaled_cov"] is None


def test_null_experiment_has_no_gaussian_targets():
    summary = replicate(ExperimentSpec(ModelParams(-1.0, 0.0), 5.0, 0.01, 20))
    assert summary.scaled_rho["target_var"] is None
    assert summary.vartheta["target_cov"] is None


def test_null_distribution_experiment():
    d, p = null_distribution_experiment(-1.0, 200.0, 0.01, 400, 21, WSamplerConfig(count=20_000))
    assert p > 0.001 and d < 0.1


def test_ks_self_consistency():
    # two independent halves of the same replicate set agree
    from scipy import stats

    raw = run_replicates(ModelParams(-1.0, 0.0), 50.0, 0.01, 600, 31)
    res = stats.ks_2samp(raw["rho_hat"][:300], raw["rho_hat"][300:])
    assert res.pvalue > 0.001
