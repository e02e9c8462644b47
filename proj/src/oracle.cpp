#include "ofo/oracle.hpp"

#include <string>

namespace ofo {

OracleSolution solve_tracking_problem(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& h,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& sens,
    const InputBox& box, const ControllerConfig& cfg, const OracleOptions& opts,
    const Eigen::VectorXd& u_start) {
    box.validate();
    if (!(opts.alpha > 0.0))
        throw ValidationError("oracle: step size must be positive");

    const Eigen::VectorXd omega = Eigen::VectorXd::Zero(box.size());
    ControllerConfig step_cfg = cfg;
    step_cfg.alpha = opts.alpha;

    Eigen::VectorXd u = project_box(u_start, box);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const Eigen::VectorXd y = h(u);
        const Eigen::MatrixXd h_sens = sens(u);
        const Eigen::VectorXd u_next = ofo_step(u, y, h_sens, box, step_cfg, omega);
        const double gap = (u_next - u).lpNorm<Eigen::Infinity>();
        u = u_next;
        if (gap < opts.tol) {
            OracleSolution sol;
            sol.u_star = u;
            sol.y_star = h(u);
            sol.iterations = it;
            sol.residual = gap;
            return sol;
        }
    }
    throw MaxIterations("oracle hit the iteration cap (" +
                            std::to_string(opts.max_iterations) + ")",
                        opts.max_iterations);
}

OracleSolution solve_acopf(const Plant& plant, const Eigen::VectorXd& d,
                           const InputBox& box, const ControllerConfig& cfg,
                           const OracleOptions& opts,
                           const Eigen::VectorXd* warm_start) {
    const Eigen::VectorXd u0 =
        warm_start != nullptr ? *warm_start : project_box(cfg.u_ref, box);
    return solve_tracking_problem(
        [&](const Eigen::VectorXd& u) { return plant.solve(u, d); },
        [&](const Eigen::VectorXd& u) { return plant.sensitivity(u, d); },
        box, cfg, opts, u0);
}

Eigen::VectorXd solve_linear_opf(const LinearModel& lin, const Eigen::VectorXd& d,
                                 const InputBox& box, const ControllerConfig& cfg,
                                 const OracleOptions& opts) {
    if (lin.D0.cols() != d.size())
        throw ValidationError("linear opf: disturbance dimension mismatch");
    const Eigen::VectorXd offset = lin.D0 * d + lin.y0;
    const OracleSolution sol = solve_tracking_problem(
        [&](const Eigen::VectorXd& u) -> Eigen::VectorXd { return lin.H0 * u + offset; },
        [&](const Eigen::VectorXd&) { return lin.H0; }, box, cfg, opts,
        project_box(cfg.u_ref, box));
    return sol.u_star;
}

OperatorEstimate probe_plant_operator(const Plant& plant, const Eigen::VectorXd& d,
                                      const InputBox& box, const ControllerConfig& cfg,
                                      int n_samples, std::uint64_t seed) {
    Rng rng(seed);
    const auto op = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
        const Eigen::VectorXd y = plant.solve(u, d);
        return grad_f(cfg, u) + plant.sensitivity(u, d).transpose() * grad_g(cfg, y);
    };
    return estimate_monotone_lipschitz(op, box, cfg.alpha, n_samples, rng);
}

} // namespace ofo
