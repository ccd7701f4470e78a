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

import json

import numpy as np
import pytest

import vflpi


def test_build_j_rows_are_differences():
    J = vflpi.build_j(4)
    assert J.shape == (3, 4)
    np.testing.assert_array_equal(J @ np.ones(4), np.zeros(3))
    np.testing.assert_array_equal(J[0], [-1.0, 1.0, 0.0, 0.0])


def test_log_ratio_matches_numpy():
    c = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(vflpi.log_ratio(c), np.log(c[1:] / c[:-1]))


def test_least_squares_recovers_exact_features():
    rng = np.random.default_rng(0)
    X, y = vflpi.generate_synthetic(n=600, d_t=6, k=4, rho=0.3, seed=1)
    assert X.shape == (600, 6) and len(y) == 600
    W, b = vflpi.train(X, y, 4, max_epochs=20, seed=2)
    conf = vflpi.confidences(W, b, X)
    np.testing.assert_allclose(conf.sum(axis=1), 1.0, atol=1e-12)

    # Passive block: the last two columns. Known active part is moved to
    # the right-hand side.
    J = vflpi.build_j(4)
    A = J @ W[:, 4:]
    cp = np.log(conf[:, 1:] / conf[:, :-1])
    rhs = cp - (J @ (W[:, :4] @ X[:, :4].T + b[:, None])).T
    est = vflpi.estimate_least_squares(A, rhs)
    np.testing.assert_allclose(est, X[:, 4:], atol=1e-8)
    assert vflpi.analytic_mse_ls(A, np.zeros((3, 3))) == 0.0
    del rng


def test_half_star_minimum_norm_shift():
    A = np.array([[1.0, 1.0, 0.0]])
    est = vflpi.estimate_half_star(A, np.array([[2.0]]))
    np.testing.assert_allclose(A @ est[0], [2.0])
    # half* = A+ b + (I - A+ A) 1/2
    P = vflpi.pseudo_inverse(A) @ A
    expected = vflpi.pseudo_inverse(A) @ [2.0] + 0.5 * (np.eye(3) - P) @ np.ones(3)
    np.testing.assert_allclose(est[0], expected, atol=1e-12)


def test_rank_errors_surface_as_exceptions():
    with pytest.raises(ArithmeticError):
        vflpi.estimate_least_squares(np.ones((2, 2)), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        vflpi.build_j(0)


def test_pps_case_ii_meets_budget():
    rng = np.random.default_rng(3)
    W = rng.normal(size=(4, 2))
    X = rng.uniform(size=(500, 2))
    g_max = 4.0 * np.sum(W * W) / 8.0
    out = vflpi.pps("ii", W, X, 0.2 * g_max, seed=1)
    assert out.case == "ii" and out.status == "ok"
    assert abs(out.g_achieved - 0.2 * g_max) <= 1e-2 * 0.2 * g_max
    R = out.R
    np.testing.assert_allclose(R.T @ R, np.eye(2), atol=1e-9)
    assert vflpi.interpretability_gap(W, out.W_n) == pytest.approx(out.g_achieved)
    assert vflpi.predicted_mse("ii", W, out.W_n, X) == pytest.approx(
        out.mse_predicted)


def test_covariance_is_population_covariance():
    rng = np.random.default_rng(4)
    X = rng.uniform(size=(200, 3))
    np.testing.assert_allclose(vflpi.covariance(X), np.cov(X.T, bias=True),
                               atol=1e-12)


def test_grid_entry_points_emit_csv():
    cfg = {
        "name": "py",
        "seed": 1,
        "dataset": {"synthetic": {"n": 800, "d_t": 4, "k": 3, "seed": 1}},
        "train": {"max_epochs": 15},
        "d_values": [1],
        "methods": ["half"],
        "max_windows": 1,
        "pps": {"cases": ["iii"], "epsilon_fractions": [0.0, 0.3]},
    }
    attack = vflpi.attack_grid_csv(json.dumps(cfg)).splitlines()
    assert len(attack) == 2 and attack[1].startswith("py,")
    pi = vflpi.pi_grid_csv(json.dumps(cfg)).splitlines()
    assert pi[0].startswith("dataset,case,d,")
    assert len(pi) == 3
