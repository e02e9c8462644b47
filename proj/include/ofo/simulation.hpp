#pragma once

#include <span>
#include <vector>

#include "ofo/estimator.hpp"
#include "ofo/oracle.hpp"
#include "ofo/scenario.hpp"

namespace ofo {

struct StepRecord {
    int t = 0;
    Eigen::VectorXd u;
    Eigen::VectorXd y;
    Eigen::VectorXd u_star;    // NaN-filled when the oracle is disabled
    double tracking_error = 0; // |u - u*|_2
    double rel_lin_error = 0;  // |dy - H du| / |dy| with the previous step's H
    int violations = 0;        // outputs outside [v_min, v_max]
    double sens_error = 0;     // |H_used - H_true|_F, NaN unless recorded
    double cov_trace = 0;      // tr(Sigma_t), 0 for variants without estimator
    double oracle_residual = 0;
    int oracle_iters = 0;
};

struct SimulationTrace {
    Variant variant = Variant::EstimatedH;
    std::vector<StepRecord> steps;
    bool diverged = false;
    int divergence_step = -1;
    bool truncated = false;
    std::string truncation_reason;
    double alpha_used = 0.0;
    ExcitationWindow window{1, 1}; // final state of the increment window

    double mean_tracking_error(int from = 0) const;
    long total_violations() const;
    std::vector<double> rel_lin_error_series() const;
};

struct OracleSeries {
    std::vector<OracleSolution> solutions; // one per step
};

/// Resolves the scenario's controller step size: explicit value, or
/// 0.3 * alpha_max sampled from the closed-loop operator at step 0.
double resolve_alpha(const Scenario& sc, const Plant& plant);

/// Oracle step size: explicit value, or the sampled eta/L^2 optimum.
double resolve_oracle_alpha(const Scenario& sc, const Plant& plant, double fallback);

/// Ground-truth trajectory u*_t for every step, warm-starting each solve
/// from the previous solution.
OracleSeries compute_oracle_series(const Scenario& sc, const Plant& plant);

/// Runs the closed loop of the scenario's variant. Per step: measure
/// y_t = h(u_t, d_t); update the estimate with the previous (du, dy) pair;
/// pick the sensitivity per variant; draw excitation noise; step the
/// controller. Plant non-convergence truncates the trace with a flag.
SimulationTrace run_simulation(const Scenario& sc);
SimulationTrace run_simulation(const Scenario& sc, const Plant& plant,
                               const OracleSeries* oracle_series);

struct VariantSummary {
    Variant variant = Variant::EstimatedH;
    double mean_tracking_error = 0;
    double final_third_tracking_error = 0;
    double final_third_rel_lin_error = 0; // mean of the 300-step moving average
    long total_violations = 0;
    bool diverged = false;
    bool truncated = false;
};

struct ComparisonReport {
    std::vector<VariantSummary> rows;
    std::vector<SimulationTrace> traces;
};

/// Runs each variant against the same plant, oracle series and seeds.
ComparisonReport compare_variants(const Scenario& sc, std::span<const Variant> variants);

/// Trailing moving average; entry t averages the last `window` values
/// available up to t.
std::vector<double> moving_average(std::span<const double> series, int window);

/// Fixed 5-minute window of the comparison metrics at 1 s resolution.
inline constexpr int kMovingAverageWindow = 300;

} // namespace ofo
