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
"""Certified robustness of graph classifiers under randomized smoothing."""

from auditvotes._core import (
    BoundsError,
    ConfigError,
    Error,
    ExperimentConfig,
    NumericError,
    ParseError,
    RunResult,
    ShapeError,
    SplitError,
    certify_node,
    clopper_pearson_bounds,
    gaussian_radius,
    generate_sbm,
    gnncert_certify,
    mean_homophily,
    poisson_binomial_pmf,
    region_table,
    run_empirical_eval,
    run_gaussian_pipeline,
    run_gnncert_pipeline,
    run_randomized_pipeline,
    sample_sparse_noise,
    summarize_report,
    two_sided_binomial_p_value,
    worst_case_margin,
)

__version__ = "0.1.0"


def config(path=None, **overrides):
    """Config from an optional file, then "section.key" overrides.

    Keyword names use "__" for the dot: config(smoothing__p_plus=0.2).
    """
    cfg = ExperimentConfig.load(path) if path else ExperimentConfig()
    for key, value in overrides.items():
        cfg[key.replace("__", ".")] = value
    return cfg
