// Copyright 2026 The vflpi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vflpi/harness.h"
#include "vflpi/stiefel.h"

namespace py = pybind11;

namespace {

using vflpi::Index;
using vflpi::Matrix;
using vflpi::Vector;

// Applies an estimator row by row: rows of `b_prime` are right-hand sides.
template <typename Solver>
Matrix SolveRows(const Matrix& A, const Matrix& b_prime) {
  Solver solver(A);
  Matrix out(b_prime.rows(), A.cols());
  for (Index i = 0; i < b_prime.rows(); ++i) {
    out.row(i) = solver.Solve(b_prime.row(i).transpose()).transpose();
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "vflpi native core";

  // Translators run newest first, so the base class goes first.
  py::register_exception<vflpi::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<vflpi::InvalidArgument>(m, "InvalidArgument",
                                                 PyExc_ValueError);
  py::register_exception<vflpi::RankDeficientError>(m, "RankDeficientError",
                                                    PyExc_ArithmeticError);

  m.def(
      "generate_synthetic",
      [](Index n, Index d_t, int k, double rho, double signal,
         std::uint64_t seed) {
        vflpi::SyntheticSpec spec;
        spec.n = n;
        spec.d_t = d_t;
        spec.k = k;
        spec.rho = rho;
        spec.signal = signal;
        spec.seed = seed;
        auto ds = vflpi::GenerateSynthetic(spec);
        return py::make_tuple(ds.features, ds.labels);
      },
      py::arg("n") = 10000, py::arg("d_t") = 8, py::arg("k") = 3,
      py::arg("rho") = 0.0, py::arg("signal") = 4.0, py::arg("seed") = 0,
      "Equicorrelated Gaussian-copula features in [0,1] with softmax labels. "
      "Returns (features, labels).");

  m.def(
      "train",
      [](const Matrix& X, const vflpi::Labels& y, int k, double lr,
         int max_epochs, int patience, Index batch_size, std::uint64_t seed) {
        vflpi::TrainConfig cfg;
        cfg.learning_rate = lr;
        cfg.max_epochs = max_epochs;
        cfg.patience = patience;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        auto p = vflpi::Train(X, y, k, cfg);
        return py::make_tuple(p.W, p.b);
      },
      py::arg("features"), py::arg("labels"), py::arg("k"),
      py::arg("learning_rate") = 1e-2, py::arg("max_epochs") = 200,
      py::arg("patience") = 10, py::arg("batch_size") = 64,
      py::arg("seed") = 0, "Multinomial LR. Returns (W, b).");

  m.def(
      "confidences",
      [](const Matrix& W, const Vector& b, const Matrix& X) {
        return vflpi::Confidences({W, b}, X);
      },
      py::arg("W"), py::arg("b"), py::arg("features"));
  m.def("log_ratio", &vflpi::LogRatio, py::arg("c"));
  m.def("build_j", &vflpi::BuildJ, py::arg("k"));
  m.def("pseudo_inverse", &vflpi::PseudoInverse, py::arg("A"));
  m.def("estimate_least_squares", &SolveRows<vflpi::LeastSquaresSolver>,
        py::arg("A"), py::arg("b_prime"),
        "Least-squares estimates, one per row of b_prime (requires d < k).");
  m.def("estimate_half_star", &SolveRows<vflpi::HalfStarSolver>, py::arg("A"),
        py::arg("b_prime"), "half* estimates, one per row of b_prime.");
  m.def("analytic_mse_ls", &vflpi::AnalyticMseLs, py::arg("A"),
        py::arg("K_cc"));
  m.def("analytic_mse_half_star", &vflpi::AnalyticMseHalfStar, py::arg("A"),
        py::arg("K_half"), py::arg("K_cc"));
  m.def("svd_closed_form_ls", &vflpi::SvdClosedFormLs, py::arg("A"),
        py::arg("K0"));
  m.def("interpretability_gap", &vflpi::InterpretabilityGap, py::arg("W_pas"),
        py::arg("W_n"));
  m.def("degenerate_epsilon", &vflpi::DegenerateEpsilon, py::arg("W_pas"));
  m.def("covariance", &vflpi::Covariance, py::arg("features"));

  py::class_<vflpi::PpsOutcome>(m, "PpsOutcome")
      .def_readonly("W_n", &vflpi::PpsOutcome::W_n)
      .def_readonly("R", &vflpi::PpsOutcome::R)
      .def_readonly("g_achieved", &vflpi::PpsOutcome::g_achieved)
      .def_readonly("mse_predicted", &vflpi::PpsOutcome::mse_predicted)
      .def_readonly("epsilon", &vflpi::PpsOutcome::epsilon)
      .def_readonly("diagnostics", &vflpi::PpsOutcome::diagnostics)
      .def_property_readonly("case",
                             [](const vflpi::PpsOutcome& o) {
                               return std::string(vflpi::PpsCaseName(o.pps_case));
                             })
      .def_property_readonly("status", [](const vflpi::PpsOutcome& o) {
        return std::string(vflpi::PpsStatusName(o.status));
      });

  m.def(
      "pps",
      [](const std::string& c, const Matrix& W_pas,
         const Matrix& passive_features, double epsilon, std::uint64_t seed) {
        vflpi::PenaltySchedule schedule;
        schedule.seed = seed;
        return vflpi::RunPps(vflpi::PpsCaseFromName(c), W_pas,
                             vflpi::ComputePassiveStats(passive_features),
                             epsilon, schedule);
      },
      py::arg("case"), py::arg("W_pas"), py::arg("passive_features"),
      py::arg("epsilon"), py::arg("seed") = 0,
      "Distorts W_pas under case 'i'..'iv' with budget epsilon; statistics "
      "come from passive_features.");
  m.def(
      "predicted_mse",
      [](const std::string& c, const Matrix& W_pas, const Matrix& W_n,
         const Matrix& passive_features) {
        return vflpi::PredictedMse(vflpi::PpsCaseFromName(c), W_pas, W_n,
                                   vflpi::ComputePassiveStats(passive_features));
      },
      py::arg("case"), py::arg("W_pas"), py::arg("W_n"),
      py::arg("passive_features"));

  m.def(
      "attack_grid_csv",
      [](const std::string& config_json) {
        return vflpi::AttackGridCsv(
            vflpi::RunAttackGrid(vflpi::ExperimentConfigFromJson(config_json)));
      },
      py::arg("config_json"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "pi_grid_csv",
      [](const std::string& config_json) {
        return vflpi::PiGridCsv(
            vflpi::RunPiGrid(vflpi::ExperimentConfigFromJson(config_json)));
      },
      py::arg("config_json"), py::call_guard<py::gil_scoped_release>());
}
