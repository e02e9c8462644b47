#include "ofo/power_flow.hpp"

#include <cmath>

namespace ofo {

Plant::Plant(FeederModel feeder, PowerFlowOptions opts)
    : feeder_(std::move(feeder)), opts_(opts) {
    feeder_.validate();
    non_slack_ = feeder_.non_slack_positions();
    const int m = static_cast<int>(non_slack_.size());

    const Eigen::MatrixXcd y_full = build_admittance(feeder_);
    const int slack = feeder_.slack_position();

    y_ll_.resize(m, m);
    y_l0_.resize(m);
    for (int i = 0; i < m; ++i) {
        y_l0_(i) = y_full(non_slack_[i], slack);
        for (int j = 0; j < m; ++j) y_ll_(i, j) = y_full(non_slack_[i], non_slack_[j]);
    }
    lu_.compute(y_ll_);

    for (int pos : feeder_.der_positions()) {
        for (int i = 0; i < m; ++i)
            if (non_slack_[i] == pos) der_rows_.push_back(i);
    }
}

void Plant::check_dimensions(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const {
    if (u.size() != n_u())
        throw ValidationError("input vector has size " + std::to_string(u.size()) +
                              ", feeder expects " + std::to_string(n_u()));
    if (d.size() != n_d())
        throw ValidationError("disturbance vector has size " + std::to_string(d.size()) +
                              ", feeder expects " + std::to_string(n_d()));
    if (!u.allFinite() || !d.allFinite())
        throw ValidationError("non-finite entry in input or disturbance vector");
    if (u(0) <= 0.0)
        throw ValidationError("slack voltage must be positive, got " + std::to_string(u(0)));
}

Eigen::VectorXcd Plant::injections(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const {
    const int m = static_cast<int>(non_slack_.size());
    Eigen::VectorXcd s(m);
    for (int i = 0; i < m; ++i) s(i) = std::complex<double>(d(i), d(m + i));
    const int n_der = static_cast<int>(der_rows_.size());
    for (int k = 0; k < n_der; ++k)
        s(der_rows_[k]) += std::complex<double>(u(1 + k), u(1 + n_der + k));
    return s;
}

Eigen::VectorXcd Plant::solve_voltages(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const {
    check_dimensions(u, d);
    const int m = static_cast<int>(non_slack_.size());
    const double v0 = u(0);
    const Eigen::VectorXcd s = injections(u, d);
    const Eigen::VectorXcd slack_current = y_l0_ * std::complex<double>(v0, 0.0);

    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(m, std::complex<double>(v0, 0.0));
    for (int it = 0; it < opts_.max_iterations; ++it) {
        const Eigen::VectorXcd i_inj = (s.array() / v.array()).conjugate();
        const Eigen::VectorXcd v_next = lu_.solve(i_inj.matrix() - slack_current);
        if (!v_next.allFinite())
            throw NonConvergence("power flow produced non-finite voltages", it + 1);
        const double dv = (v_next - v).cwiseAbs().maxCoeff();
        v = v_next;
        const Eigen::VectorXcd residual =
            v.array() * (y_ll_ * v + slack_current).conjugate().array() - s.array();
        if (dv <= opts_.tol && residual.cwiseAbs().maxCoeff() <= opts_.tol) return v;
    }
    throw NonConvergence("power flow did not converge in " +
                             std::to_string(opts_.max_iterations) + " iterations",
                         opts_.max_iterations);
}

Eigen::VectorXd Plant::solve(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const {
    return solve_voltages(u, d).cwiseAbs();
}

double Plant::max_mismatch(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const {
    const Eigen::VectorXcd v = solve_voltages(u, d);
    const Eigen::VectorXcd s = injections(u, d);
    const Eigen::VectorXcd i_bus = y_ll_ * v + y_l0_ * std::complex<double>(u(0), 0.0);
    return (v.array() * i_bus.conjugate().array() - s.array()).abs().maxCoeff();
}

Eigen::MatrixXd Plant::sensitivity(const Eigen::VectorXd& u, const Eigen::VectorXd& d) const {
    check_dimensions(u, d);
    Eigen::MatrixXd h(n_y(), n_u());
    Eigen::VectorXd up = u, um = u;
    for (int k = 0; k < n_u(); ++k) {
        up(k) = u(k) + fd_step;
        um(k) = u(k) - fd_step;
        h.col(k) = (solve(up, d) - solve(um, d)) / (2.0 * fd_step);
        up(k) = u(k);
        um(k) = u(k);
    }
    return h;
}

Eigen::MatrixXd Plant::disturbance_sensitivity(const Eigen::VectorXd& u,
                                               const Eigen::VectorXd& d) const {
    check_dimensions(u, d);
    Eigen::MatrixXd dd(n_y(), n_d());
    Eigen::VectorXd dp = d, dm = d;
    for (int k = 0; k < n_d(); ++k) {
        dp(k) = d(k) + fd_step;
        dm(k) = d(k) - fd_step;
        dd.col(k) = (solve(u, dp) - solve(u, dm)) / (2.0 * fd_step);
        dp(k) = d(k);
        dm(k) = d(k);
    }
    return dd;
}

LinearModel Plant::linearize(const Eigen::VectorXd& u_op, const Eigen::VectorXd& d_op) const {
    LinearModel lin;
    lin.H0 = sensitivity(u_op, d_op);
    lin.D0 = disturbance_sensitivity(u_op, d_op);
    lin.y0 = solve(u_op, d_op) - lin.H0 * u_op - lin.D0 * d_op;
    return lin;
}

Eigen::VectorXd Plant::zero_injection_input(double slack_v) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n_u());
    u(0) = slack_v;
    return u;
}

} // namespace ofo
