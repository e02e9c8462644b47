#pragma once

#include <functional>

#include <Eigen/Dense>

#include "ofo/errors.hpp"
#include "ofo/rng.hpp"

namespace ofo {

/// Componentwise input bounds, lower <= upper.
struct InputBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    void validate() const;
    int size() const { return static_cast<int>(lower.size()); }
    bool contains(const Eigen::VectorXd& u, double slack = 0.0) const;
    double diagonal_norm() const { return (upper - lower).norm(); }
};

struct ControllerConfig {
    double alpha = 0.05;           // gradient step size
    Eigen::VectorXd u_ref;         // tracking reference
    double rho = 100.0;            // penalty weight
    double v_min = 0.94;           // output limits, p.u.
    double v_max = 1.06;
    double sigma_u = 1e-4;         // excitation std, p.u.
    double excitation_bound = 3.0; // truncation, multiples of sigma_u

    void validate(int n_u) const;
};

/// Gradient of the tracking cost f(u) = 1/2 |u - u_ref|^2.
Eigen::VectorXd grad_f(const ControllerConfig& cfg, const Eigen::VectorXd& u);
double cost_f(const ControllerConfig& cfg, const Eigen::VectorXd& u);

/// Gradient of the quadratic hinge penalty on the output limits:
/// rho * (max(y - v_max, 0) - max(v_min - y, 0)) componentwise.
Eigen::VectorXd grad_g(const ControllerConfig& cfg, const Eigen::VectorXd& y);
double penalty_g(const ControllerConfig& cfg, const Eigen::VectorXd& y);

/// Componentwise clamp onto the box; idempotent.
Eigen::VectorXd project_box(const Eigen::VectorXd& u, const InputBox& box);

/// i.i.d. zero-mean Gaussian entries with std sigma_u, resampled until
/// within +-excitation_bound * sigma_u. sigma_u = 0 yields the zero vector.
Eigen::VectorXd excitation_sample(Rng& rng, const ControllerConfig& cfg, int n);

/// One projected-gradient step with excitation noise inside the projection:
///   u+ = P_box[ u - alpha (grad_f(u) + H^T grad_g(y)) + omega_u ]
/// With omega_u = 0 this is the plain constant-sensitivity update.
Eigen::VectorXd ofo_step(const Eigen::VectorXd& u, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& sensitivity, const InputBox& box,
                         const ControllerConfig& cfg, const Eigen::VectorXd& omega_u);

struct OperatorEstimate {
    double eta_hat = 0.0;   // sampled strong-monotonicity constant
    double l_hat = 0.0;     // sampled Lipschitz constant
    double alpha_max = 0.0; // 2 eta / L^2
    double epsilon = 0.0;   // sqrt(1 - 2 eta alpha + L^2 alpha^2) at `alpha`
};

/// Samples pairs in the box to bound the monotonicity and Lipschitz
/// constants of an operator F, and derives the contractive step-size range.
/// Throws NotMonotoneInRegion when the sampled eta is not positive.
OperatorEstimate estimate_monotone_lipschitz(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
    const InputBox& box, double alpha, int n_samples, Rng& rng);

} // namespace ofo
