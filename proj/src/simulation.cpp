#include "ofo/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ofo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int count_violations(const Eigen::VectorXd& y, const ControllerConfig& cfg) {
    int n = 0;
    for (int i = 0; i < y.size(); ++i)
        if (y(i) < cfg.v_min || y(i) > cfg.v_max) ++n;
    return n;
}

double divergence_threshold(const Scenario& sc) {
    if (sc.sim.divergence_threshold > 0.0) return sc.sim.divergence_threshold;
    std::vector<double> diag;
    diag.reserve(sc.profiles.box.size());
    for (const InputBox& b : sc.profiles.box) diag.push_back(b.diagonal_norm());
    std::nth_element(diag.begin(), diag.begin() + diag.size() / 2, diag.end());
    return 0.5 * diag[diag.size() / 2];
}

} // namespace

double SimulationTrace::mean_tracking_error(int from) const {
    if (steps.empty() || from >= static_cast<int>(steps.size())) return kNaN;
    double sum = 0.0;
    int n = 0;
    for (size_t t = from; t < steps.size(); ++t) {
        sum += steps[t].tracking_error;
        ++n;
    }
    return sum / n;
}

long SimulationTrace::total_violations() const {
    long total = 0;
    for (const StepRecord& s : steps) total += s.violations;
    return total;
}

std::vector<double> SimulationTrace::rel_lin_error_series() const {
    std::vector<double> out;
    out.reserve(steps.size());
    for (const StepRecord& s : steps) out.push_back(s.rel_lin_error);
    return out;
}

double resolve_alpha(const Scenario& sc, const Plant& plant) {
    if (sc.controller.alpha > 0.0) return sc.controller.alpha;
    ControllerConfig probe_cfg = sc.controller;
    probe_cfg.alpha = 1.0; // placeholder, only the gradients matter here
    const OperatorEstimate est =
        probe_plant_operator(plant, sc.profiles.d[0], sc.profiles.box[0], probe_cfg,
                             200, sc.seeds.tuning);
    return 0.3 * est.alpha_max;
}

double resolve_oracle_alpha(const Scenario& sc, const Plant& plant, double fallback) {
    if (sc.oracle.alpha > 0.0) return sc.oracle.alpha;
    ControllerConfig probe_cfg = sc.controller;
    probe_cfg.alpha = 1.0;
    try {
        const OperatorEstimate est =
            probe_plant_operator(plant, sc.profiles.d[0], sc.profiles.box[0], probe_cfg,
                                 200, sc.seeds.tuning);
        return est.eta_hat / (est.l_hat * est.l_hat);
    } catch (const NotMonotoneInRegion&) {
        return fallback; // fall back to the controller step
    }
}

OracleSeries compute_oracle_series(const Scenario& sc, const Plant& plant) {
    OracleSeries series;
    series.solutions.reserve(sc.horizon);

    const double alpha_ctrl = resolve_alpha(sc, plant);
    OracleOptions opts;
    opts.alpha = resolve_oracle_alpha(sc, plant, alpha_ctrl);
    opts.tol = sc.oracle.tol;
    opts.max_iterations = sc.oracle.max_iterations;

    ControllerConfig cfg = sc.controller;
    cfg.alpha = alpha_ctrl;

    const Eigen::VectorXd* warm = nullptr;
    for (int t = 0; t < sc.horizon; ++t) {
        series.solutions.push_back(
            solve_acopf(plant, sc.profiles.d[t], sc.profiles.box[t], cfg, opts, warm));
        warm = &series.solutions.back().u_star;
    }
    return series;
}

SimulationTrace run_simulation(const Scenario& sc) {
    Plant plant(sc.feeder);
    if (!sc.oracle.enabled) return run_simulation(sc, plant, nullptr);
    const OracleSeries series = compute_oracle_series(sc, plant);
    return run_simulation(sc, plant, &series);
}

SimulationTrace run_simulation(const Scenario& sc, const Plant& plant,
                               const OracleSeries* oracle_series) {
    sc.validate();
    if (oracle_series &&
        static_cast<int>(oracle_series->solutions.size()) != sc.horizon)
        throw ValidationError("oracle series length does not match horizon");

    const int n_u = plant.n_u();

    // Model-side feeder: source of H0 and of the estimator's initial guess.
    // Admittance perturbation applies here, never to the true plant.
    FeederModel model_feeder = sc.feeder;
    if (sc.perturbation)
        model_feeder = perturb_admittance(sc.feeder, sc.perturbation->lines,
                                          sc.perturbation->max_fraction,
                                          sc.seeds.perturbation);
    const Plant model_plant(std::move(model_feeder));
    const LinearModel lin = model_plant.linearize(model_plant.zero_injection_input(),
                                                  Eigen::VectorXd::Zero(plant.n_d()));

    ControllerConfig cfg = sc.controller;
    cfg.alpha = resolve_alpha(sc, plant);

    OracleOptions lin_opts;
    lin_opts.alpha = cfg.alpha;
    lin_opts.tol = sc.oracle.tol;
    lin_opts.max_iterations = sc.oracle.max_iterations;

    SensitivityEstimate estimate(lin.H0, sc.estimator.backend, sc.estimator.sigma0,
                                 sc.noise);
    const int window_len = sc.estimator.window > 0 ? sc.estimator.window : n_u;

    SimulationTrace trace;
    trace.variant = sc.variant;
    trace.alpha_used = cfg.alpha;
    trace.window = ExcitationWindow(n_u, std::max(window_len, n_u));
    trace.steps.reserve(sc.horizon);

    Rng excitation_rng(sc.seeds.excitation);
    const double blowup = divergence_threshold(sc);
    int consecutive_over = 0;

    Eigen::VectorXd u = project_box(cfg.u_ref, sc.profiles.box[0]);
    Eigen::VectorXd u_prev, y_prev;
    Eigen::MatrixXd h_used_prev; // sensitivity employed at the previous step

    for (int t = 0; t < sc.horizon; ++t) {
        const Eigen::VectorXd& d = sc.profiles.d[t];
        const InputBox& box = sc.profiles.box[t];

        Eigen::VectorXd y;
        try {
            y = plant.solve(u, d);
        } catch (const NonConvergence& e) {
            trace.truncated = true;
            trace.truncation_reason = e.what();
            break;
        }

        StepRecord rec;
        rec.t = t;
        rec.u = u;
        rec.y = y;
        rec.violations = count_violations(y, cfg);

        // Model-fit metric with the sensitivity that was in use before this
        // step's measurement arrived (one-step-ahead prediction error).
        if (t >= 1) {
            const Eigen::VectorXd dy = y - y_prev;
            const Eigen::VectorXd du = u - u_prev;
            const double dy_norm = dy.norm();
            rec.rel_lin_error =
                dy_norm > 0.0 ? (dy - h_used_prev * du).norm() / dy_norm : 0.0;
        }

        if (sc.variant == Variant::EstimatedH && t >= 1)
            estimate.update(u - u_prev, y - y_prev);

        Eigen::MatrixXd h_used;
        switch (sc.variant) {
            case Variant::TrueH: h_used = plant.sensitivity(u, d); break;
            case Variant::EstimatedH: h_used = estimate.matrix(); break;
            case Variant::ConstantH0:
            case Variant::LinearFeedforward: h_used = lin.H0; break;
        }

        if (sc.sim.record_true_sens_error) {
            const Eigen::MatrixXd h_true = sc.variant == Variant::TrueH
                                               ? h_used
                                               : plant.sensitivity(u, d);
            rec.sens_error = (h_used - h_true).norm();
        } else {
            rec.sens_error = kNaN;
        }
        rec.cov_trace =
            sc.variant == Variant::EstimatedH ? estimate.covariance_trace() : 0.0;

        if (oracle_series) {
            const OracleSolution& sol = oracle_series->solutions[t];
            rec.u_star = sol.u_star;
            rec.tracking_error = (u - sol.u_star).norm();
            rec.oracle_residual = sol.residual;
            rec.oracle_iters = sol.iterations;
        } else {
            rec.u_star = Eigen::VectorXd::Constant(n_u, kNaN);
            rec.tracking_error = kNaN;
            rec.oracle_residual = kNaN;
        }

        if (oracle_series) {
            if (rec.tracking_error > blowup) {
                if (++consecutive_over >= sc.sim.divergence_steps && !trace.diverged) {
                    trace.diverged = true;
                    trace.divergence_step = t - sc.sim.divergence_steps + 1;
                }
            } else {
                consecutive_over = 0;
            }
        }

        Eigen::VectorXd u_next;
        if (sc.variant == Variant::LinearFeedforward) {
            u_next = solve_linear_opf(lin, d, box, cfg, lin_opts);
        } else {
            const Eigen::VectorXd omega = excitation_sample(excitation_rng, cfg, n_u);
            u_next = ofo_step(u, y, h_used, box, cfg, omega);
        }

        trace.window.push(u_next - u);
        trace.steps.push_back(std::move(rec));

        u_prev = u;
        y_prev = y;
        h_used_prev = h_used;
        u = u_next;
    }

    return trace;
}

ComparisonReport compare_variants(const Scenario& sc, std::span<const Variant> variants) {
    if (variants.size() < 2)
        throw ValidationError("compare_variants needs at least two variants");

    Plant plant(sc.feeder);
    OracleSeries series;
    const OracleSeries* series_ptr = nullptr;
    if (sc.oracle.enabled) {
        series = compute_oracle_series(sc, plant);
        series_ptr = &series;
    }

    ComparisonReport report;
    for (Variant v : variants) {
        Scenario run = sc;
        run.variant = v;
        SimulationTrace trace = run_simulation(run, plant, series_ptr);

        VariantSummary row;
        row.variant = v;
        row.diverged = trace.diverged;
        row.truncated = trace.truncated;
        row.total_violations = trace.total_violations();
        row.mean_tracking_error = trace.mean_tracking_error();
        const int from = 2 * static_cast<int>(trace.steps.size()) / 3;
        row.final_third_tracking_error = trace.mean_tracking_error(from);

        const std::vector<double> ma =
            moving_average(trace.rel_lin_error_series(), kMovingAverageWindow);
        if (!ma.empty()) {
            double sum = 0.0;
            int n = 0;
            for (size_t t = from; t < ma.size(); ++t) {
                sum += ma[t];
                ++n;
            }
            row.final_third_rel_lin_error = n > 0 ? sum / n : kNaN;
        }

        report.rows.push_back(row);
        report.traces.push_back(std::move(trace));
    }
    return report;
}

std::vector<double> moving_average(std::span<const double> series, int window) {
    if (window < 1) throw ValidationError("moving_average: window must be >= 1");
    std::vector<double> out;
    out.reserve(series.size());
    double sum = 0.0;
    for (size_t t = 0; t < series.size(); ++t) {
        sum += series[t];
        if (t >= static_cast<size_t>(window)) sum -= series[t - window];
        const int n = std::min<int>(window, static_cast<int>(t) + 1);
        out.push_back(sum / n);
    }
    return out;
}

} // namespace ofo
