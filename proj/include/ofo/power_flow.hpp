#pragma once

#include <Eigen/Dense>

#include "ofo/feeder.hpp"

namespace ofo {

/// First-order model y = H0 u + D0 d + y0 anchored at an operating point.
struct LinearModel {
    Eigen::MatrixXd H0; // n_y x n_u
    Eigen::MatrixXd D0; // n_y x n_d
    Eigen::VectorXd y0; // n_y
};

struct PowerFlowOptions {
    double tol = 1e-9;        // max |dv| and max power mismatch, p.u.
    int max_iterations = 200;
};

/// The true grid. Wraps a feeder with its admittance matrix, the factorized
/// non-slack block, and the nonlinear input-output map y = h(u, d) realized
/// by a fixed-point Z-bus power flow:
///
///     v_L <- Y_LL^-1 ( conj(s_L ./ v_L) - Y_L0 v_0 )
///
/// Iteration stops when both the voltage change and the complex power
/// mismatch fall below `tol`. All methods are const and thread-safe.
class Plant {
public:
    explicit Plant(FeederModel feeder, PowerFlowOptions opts = {});

    const FeederModel& feeder() const { return feeder_; }
    int n_u() const { return feeder_.n_u(); }
    int n_d() const { return feeder_.n_d(); }
    int n_y() const { return feeder_.n_y(); }

    /// y = h(u, d): voltage magnitudes at the non-slack buses.
    /// Throws NonConvergence when the iteration cap is hit.
    Eigen::VectorXd solve(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const;

    /// Exact input sensitivity grad_u h by central finite differences with
    /// step `fd_step`; column order matches the input layout.
    Eigen::MatrixXd sensitivity(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const;

    /// grad_d h by central finite differences.
    Eigen::MatrixXd disturbance_sensitivity(const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& d) const;

    /// Taylor model at (u_op, d_op): H0, D0 by finite differences and
    /// y0 = h(u_op, d_op) - H0 u_op - D0 d_op.
    LinearModel linearize(const Eigen::VectorXd& u_op, const Eigen::VectorXd& d_op) const;

    /// Max complex power mismatch of the converged solution at (u, d).
    double max_mismatch(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const;

    /// Input at the zero-injection operating point: slack at `slack_v`,
    /// all DER injections zero.
    Eigen::VectorXd zero_injection_input(double slack_v = 1.0) const;

    static constexpr double fd_step = 1e-5;

private:
    Eigen::VectorXcd injections(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const;
    Eigen::VectorXcd solve_voltages(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const;
    void check_dimensions(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const;

    FeederModel feeder_;
    PowerFlowOptions opts_;
    std::vector<int> non_slack_;        // bus positions, file order
    std::vector<int> der_rows_;         // row in the non-slack block per DER bus
    Eigen::VectorXcd y_l0_;             // slack column of the non-slack rows
    Eigen::MatrixXcd y_ll_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

} // namespace ofo
