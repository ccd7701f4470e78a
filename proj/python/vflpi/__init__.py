# Copyright 2026 The vflpi Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Feature inference attacks and parameter-distortion defenses for
vertically federated logistic regression."""

from vflpi._core import (
    Error,
    InvalidArgument,
    PpsOutcome,
    RankDeficientError,
    analytic_mse_half_star,
    analytic_mse_ls,
    attack_grid_csv,
    build_j,
    confidences,
    covariance,
    degenerate_epsilon,
    estimate_half_star,
    estimate_least_squares,
    generate_synthetic,
    interpretability_gap,
    log_ratio,
    pi_grid_csv,
    pps,
    predicted_mse,
    pseudo_inverse,
    svd_closed_form_ls,
    train,
)

__all__ = [
    "Error",
    "InvalidArgument",
    "PpsOutcome",
    "RankDeficientError",
    "analytic_mse_half_star",
    "analytic_mse_ls",
    "attack_grid_csv",
    "build_j",
    "confidences",
    "covariance",
    "degenerate_epsilon",
    "estimate_half_star",
    "estimate_least_squares",
    "generate_synthetic",
    "interpretability_gap",
    "log_ratio",
    "pi_grid_csv",
    "pps",
    "predicted_mse",
    "pseudo_inverse",
    "svd_closed_form_ls",
    "train",
]
