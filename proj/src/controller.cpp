#include "ofo/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ofo {

void InputBox::validate() const {
    if (lower.size() != upper.size())
        throw ValidationError("input box: lower and upper differ in size");
    if (!lower.allFinite() || !upper.allFinite())
        throw ValidationError("input box: non-finite bound");
    for (int i = 0; i < lower.size(); ++i)
        if (lower(i) > upper(i))
            throw ValidationError("input box: lower > upper at component " +
                                  std::to_string(i));
}

bool InputBox::contains(const Eigen::VectorXd& u, double slack) const {
    for (int i = 0; i < lower.size(); ++i)
        if (u(i) < lower(i) - slack || u(i) > upper(i) + slack) return false;
    return true;
}

void ControllerConfig::validate(int n_u) const {
    if (!(alpha > 0.0)) throw ValidationError("controller: alpha must be positive");
    if (rho < 0.0) throw ValidationError("controller: rho must be >= 0");
    if (!(v_min < v_max)) throw ValidationError("controller: v_min must be below v_max");
    if (sigma_u < 0.0) throw ValidationError("controller: sigma_u must be >= 0");
    if (!(excitation_bound > 0.0))
        throw ValidationError("controller: excitation_bound must be positive");
    if (u_ref.size() != n_u)
        throw ValidationError("controller: u_ref has size " + std::to_string(u_ref.size()) +
                              ", expected " + std::to_string(n_u));
}

Eigen::VectorXd grad_f(const ControllerConfig& cfg, const Eigen::VectorXd& u) {
    return u - cfg.u_ref;
}

double cost_f(const ControllerConfig& cfg, const Eigen::VectorXd& u) {
    return 0.5 * (u - cfg.u_ref).squaredNorm();
}

Eigen::VectorXd grad_g(const ControllerConfig& cfg, const Eigen::VectorXd& y) {
    Eigen::VectorXd g(y.size());
    for (int i = 0; i < y.size(); ++i)
        g(i) = cfg.rho * (std::max(y(i) - cfg.v_max, 0.0) - std::max(cfg.v_min - y(i), 0.0));
    return g;
}

double penalty_g(const ControllerConfig& cfg, const Eigen::VectorXd& y) {
    double total = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        const double over = std::max(y(i) - cfg.v_max, 0.0);
        const double under = std::max(cfg.v_min - y(i), 0.0);
        total += 0.5 * cfg.rho * (over * over + under * under);
    }
    return total;
}

Eigen::VectorXd project_box(const Eigen::VectorXd& u, const InputBox& box) {
    if (u.size() != box.size())
        throw ValidationError("project_box: dimension mismatch");
    return u.cwiseMax(box.lower).cwiseMin(box.upper);
}

Eigen::VectorXd excitation_sample(Rng& rng, const ControllerConfig& cfg, int n) {
    Eigen::VectorXd omega = Eigen::VectorXd::Zero(n);
    if (cfg.sigma_u == 0.0) return omega;
    const double bound = cfg.excitation_bound;
    for (int i = 0; i < n; ++i) {
        double z = rng.gaussian();
        while (std::abs(z) > bound) z = rng.gaussian();
        omega(i) = cfg.sigma_u * z;
    }
    return omega;
}

Eigen::VectorXd ofo_step(const Eigen::VectorXd& u, const Eigen::VectorXd& y,
                         const Eigen::MatrixXd& sensitivity, const InputBox& box,
                         const ControllerConfig& cfg, const Eigen::VectorXd& omega_u) {
    const int n = static_cast<int>(u.size());
    if (sensitivity.rows() != y.size() || sensitivity.cols() != n ||
        box.size() != n || omega_u.size() != n)
        throw ValidationError("ofo_step: dimension mismatch");
    if (!u.allFinite() || !y.allFinite() || !sensitivity.allFinite())
        throw ValidationError("ofo_step: non-finite input");

    const Eigen::VectorXd gy = grad_g(cfg, y);
    // Componentwise arithmetic, kept in a plain loop so the update sequence
    // is reproducible independent of Eigen's product kernels.
    Eigen::VectorXd next(n);
    for (int i = 0; i < n; ++i) {
        double descent = u(i) - cfg.u_ref(i);
        for (int j = 0; j < y.size(); ++j) descent += sensitivity(j, i) * gy(j);
        const double raw = u(i) - cfg.alpha * descent + omega_u(i);
        next(i) = std::clamp(raw, box.lower(i), box.upper(i));
    }
    return next;
}

OperatorEstimate estimate_monotone_lipschitz(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
    const InputBox& box, double alpha, int n_samples, Rng& rng) {
    box.validate();
    if (n_samples < 1)
        throw ValidationError("estimate_monotone_lipschitz: n_samples must be >= 1");

    const int n = box.size();
    const auto sample_point = [&] {
        Eigen::VectorXd u(n);
        for (int i = 0; i < n; ++i) u(i) = rng.uniform(box.lower(i), box.upper(i));
        return u;
    };

    OperatorEstimate est;
    est.eta_hat = std::numeric_limits<double>::infinity();
    est.l_hat = 0.0;
    for (int k = 0; k < n_samples; ++k) {
        const Eigen::VectorXd u1 = sample_point();
        const Eigen::VectorXd u2 = sample_point();
        const double dist2 = (u1 - u2).squaredNorm();
        if (dist2 <= 1e-24) continue; // degenerate pair (collapsed box)
        const Eigen::VectorXd df = op(u1) - op(u2);
        est.eta_hat = std::min(est.eta_hat, (u1 - u2).dot(df) / dist2);
        est.l_hat = std::max(est.l_hat, df.norm() / std::sqrt(dist2));
    }

    if (!std::isfinite(est.eta_hat))
        throw ValidationError("estimate_monotone_lipschitz: box has zero volume");
    if (est.eta_hat <= 0.0)
        throw NotMonotoneInRegion("sampled operator is not strongly monotone (eta_hat = " +
                                  std::to_string(est.eta_hat) + ")");

    est.alpha_max = 2.0 * est.eta_hat / (est.l_hat * est.l_hat);
    est.epsilon = std::sqrt(std::max(
        0.0, 1.0 - 2.0 * est.eta_hat * alpha + est.l_hat * est.l_hat * alpha * alpha));
    return est;
}

} // namespace ofo
