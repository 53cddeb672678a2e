# Copyright 2026 The AuditVotes Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Smoke tests for the Python module."""

import json
import math
from itertools import product

import numpy as np
import pytest

import auditvotes as av


def small_config(**extra):
    cfg = av.config(
        run__seed=17,
        run__threads=1,
        classifier__hidden=32,
        classifier__learning_rate=0.01,
        classifier__max_epochs=150,
        classifier__patience=50,
        classifier__validation_samples=2,
        **extra,
    )
    return cfg


def test_config_round_trip(tmp_path):
    cfg = av.config(smoothing__p_plus=0.2, smoothing__samples=50)
    assert cfg["smoothing.p_plus"] == "0.2"
    assert "certify.max_ra" in av.ExperimentConfig.keys()
    path = tmp_path / "c.ini"
    cfg.save(str(path))
    again = av.ExperimentConfig.load(str(path))
    assert again.to_ini() == cfg.to_ini()


def test_errors_map_to_python_exceptions():
    with pytest.raises(av.ConfigError):
        av.ExperimentConfig().set("nope.key", "1")
    with pytest.raises(av.ConfigError):
        av.config(smoothing__samples=0).validate()
    assert issubclass(av.ConfigError, av.Error)
    assert issubclass(av.Error, RuntimeError)


def test_poisson_binomial_matches_product_expansion():
    p = [0.1, 0.5, 0.7]
    want = np.zeros(4)
    for bits in product([0, 1], repeat=3):
        mass = math.prod(q if b else 1 - q for q, b in zip(p, bits))
        want[sum(bits)] += mass
    np.testing.assert_allclose(av.poisson_binomial_pmf(p), want, atol=1e-15)


def test_region_table_example():
    t = av.region_table(0.2, 0.6, 1, 0)
    np.testing.assert_allclose(t["r"], [0.8, 0.2], atol=1e-12)
    np.testing.assert_allclose(t["r"], np.exp(t["log_ratios"]) * t["r_prime"], atol=1e-12)


def test_certification_primitives():
    assert av.gaussian_radius(0.5 * math.erfc(-1 / math.sqrt(2)),
                              0.5 * math.erfc(1 / math.sqrt(2)), 1.0) == pytest.approx(1.0, abs=1e-9)
    assert av.gnncert_certify([7, 3, 2]) == (0, 2)
    assert av.gnncert_certify([3, 3]) == (0, 0)
    lo, hi = av.clopper_pearson_bounds([990, 10], alpha=0.001)
    assert 0.97 < lo < 0.99 and 0.01 < hi < 0.03
    assert av.clopper_pearson_bounds([0, 0]) is None
    mu, certified = av.worst_case_margin(0.2, 0.6, 0, 0, 0.9, 0.05)
    assert certified and mu == pytest.approx(0.85)
    status, predicted, _ = av.certify_node([1000, 0, 0], 0.0, 0.8, 0, 5)
    assert (status, predicted) == ("certified", 0)
    status, _, _ = av.certify_node([60, 40], 0.0, 0.8, 0, 0, alpha=0.05)
    assert status == "abstain"
    assert av.two_sided_binomial_p_value(60, 100) == pytest.approx(0.056887933640, abs=1e-10)


def test_noise_sampler_is_deterministic():
    g = av.generate_sbm(seed=3)
    a = av.sample_sparse_noise(g["edges"], g["num_nodes"], 0.01, 0.5, seed=1, index=4)
    b = av.sample_sparse_noise(g["edges"], g["num_nodes"], 0.01, 0.5, seed=1, index=4)
    c = av.sample_sparse_noise(g["edges"], g["num_nodes"], 0.01, 0.5, seed=1, index=5)
    assert a.shape[1] == 2 and np.array_equal(a, b) and not np.array_equal(a, c)
    assert av.mean_homophily(g["edges"], g["labels"]) > av.mean_homophily(a, g["labels"])


def test_randomized_pipeline(tmp_path):
    cfg = small_config(smoothing__p_plus=0.01, smoothing__p_minus=0.5, smoothing__samples=100,
                       certify__max_ra=2, certify__max_rd=2)
    res = av.run_randomized_pipeline(cfg)
    rep = res.report
    assert rep["scheme"] == "sparse"
    assert res.counts.shape == (rep["num_nodes"], 3)
    assert np.all(res.counts.sum(axis=1) == res.n_valid)
    for cell in rep["certified_accuracy"]:
        assert cell["certified_accuracy"] <= rep["clean_accuracy"] + 1e-12
    assert res.certified_accuracy(0, 0) == pytest.approx(
        next(c["certified_accuracy"] for c in rep["certified_accuracy"] if c["r_a"] == 0 and c["r_d"] == 0),
        abs=1e-6)
    res.write(cfg, str(tmp_path))
    assert json.loads((tmp_path / "report.json").read_text())["num_samples"] == 100
    assert (tmp_path / "grid.csv").read_text().startswith("node,ra,rd,status\n")
    assert "certified accuracy" in av.summarize_report((tmp_path / "report.json").read_text())


def test_gnncert_and_gaussian_pipelines():
    res = av.run_gnncert_pipeline(small_config(run__scheme="partition", smoothing__groups=4))
    curve = [c["certified_accuracy"] for c in res.report["certified_accuracy"]]
    assert all(a >= b for a, b in zip(curve, curve[1:]))
    assert len(res.partition_budgets) == res.report["num_nodes"]

    res = av.run_gaussian_pipeline(av.config(run__scheme="gaussian", smoothing__samples=200,
                                             blobs__test_per_class=20, run__threads=1))
    assert len(res.radii) == 40
    assert np.all(res.radii >= 0)
