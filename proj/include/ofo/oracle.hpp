#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "ofo/controller.hpp"
#include "ofo/power_flow.hpp"

namespace ofo {

struct OracleOptions {
    double alpha = 0.05;       // projected-gradient step of the oracle
    double tol = 1e-8;         // sup-norm fixed-point gap
    int max_iterations = 100000;
};

struct OracleSolution {
    Eigen::VectorXd u_star;
    Eigen::VectorXd y_star;
    int iterations = 0;
    double residual = 0.0; // final fixed-point gap, sup norm
};

/// Projected-gradient solve of a generic tracking problem
/// min f(u) + g(h(u)) over the box, with the sensitivity re-evaluated at
/// every iterate. `h` and `sens` abstract the plant so the same loop serves
/// the nonlinear grid, linear models and synthetic test plants.
OracleSolution solve_tracking_problem(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& h,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& sens,
    const InputBox& box, const ControllerConfig& cfg, const OracleOptions& opts,
    const Eigen::VectorXd& u_start);

/// Ground-truth AC-OPF solution (penalty formulation) at disturbance d:
/// fixed point of the projected-gradient operator with the exact sensitivity
/// recomputed from the plant at every iterate. Warm start optional.
OracleSolution solve_acopf(const Plant& plant, const Eigen::VectorXd& d,
                           const InputBox& box, const ControllerConfig& cfg,
                           const OracleOptions& opts,
                           const Eigen::VectorXd* warm_start = nullptr);

/// Feedforward baseline: minimizes f(u) + g(H0 u + D0 d + y0) over the box.
/// Never touches the plant.
Eigen::VectorXd solve_linear_opf(const LinearModel& lin, const Eigen::VectorXd& d,
                                 const InputBox& box, const ControllerConfig& cfg,
                                 const OracleOptions& opts);

/// Samples the closed-loop gradient operator
/// F(u) = grad_f(u) + sens(u)^T grad_g(h(u, d)) on the box and returns its
/// monotonicity/Lipschitz estimates. Basis for step-size selection.
OperatorEstimate probe_plant_operator(const Plant& plant, const Eigen::VectorXd& d,
                                      const InputBox& box, const ControllerConfig& cfg,
                                      int n_samples, std::uint64_t seed);

} // namespace ofo
