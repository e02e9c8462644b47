// Command-line front end: scenario runs, variant comparisons, profile
// generation, step-size probing and offline estimator replay.
//
// Exit codes: 0 success, 2 validation error, 3 divergence flagged,
// 4 plant non-convergence.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ofo/scenario.hpp"
#include "ofo/simulation.hpp"
#include "ofo/trace_io.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitNonConvergence = 4;

struct Overrides {
    double alpha = -1.0;
    double sigma_u = -1.0;
    double rho = -1.0;
    long long seed = -1;
    bool no_oracle = false;
};

void apply_overrides(ofo::Scenario& sc, const Overrides& ov) {
    if (ov.alpha >= 0.0) sc.controller.alpha = ov.alpha;
    if (ov.sigma_u >= 0.0) sc.controller.sigma_u = ov.sigma_u;
    if (ov.rho >= 0.0) sc.controller.rho = ov.rho;
    if (ov.seed >= 0) sc.seeds.excitation = static_cast<std::uint64_t>(ov.seed);
    if (ov.no_oracle) sc.oracle.enabled = false;
}

void add_override_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--alpha", ov.alpha, "Override the controller step size");
    cmd->add_option("--sigma-u", ov.sigma_u, "Override the excitation std");
    cmd->add_option("--rho", ov.rho, "Override the penalty weight");
    cmd->add_option("--seed", ov.seed, "Override the excitation seed");
    cmd->add_flag("--no-oracle", ov.no_oracle, "Skip the AC-OPF ground truth");
}

void dump_estimate_json(const ofo::SensitivityEstimate& est,
                        const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["ny"] = est.ny();
    doc["nu"] = est.nu();
    doc["covariance_trace"] = est.covariance_trace();
    const Eigen::MatrixXd h = est.matrix();
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < h.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < h.cols(); ++j) row.push_back(h(i, j));
        rows.push_back(row);
    }
    doc["h_hat"] = rows;
    std::ofstream out(path);
    if (!out)
        throw ofo::ValidationError("cannot write estimate JSON " + path.string());
    out << doc.dump(2) << "\n";
}

int finish_run(const ofo::SimulationTrace& trace) {
    if (trace.truncated) {
        std::cerr << "plant non-convergence at step " << trace.steps.size() << ": "
                  << trace.truncation_reason << "\n";
        return kExitNonConvergence;
    }
    if (trace.diverged) {
        std::cerr << "divergence flagged from step " << trace.divergence_step << "\n";
        return kExitDiverged;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online feedback optimization with sensitivity estimation"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = ".";
    std::string dump_estimate;
    Overrides ov;

    auto* run = app.add_subcommand("run", "Run one scenario and export its trace");
    run->add_option("scenario", scenario_path, "Scenario file")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--dump-estimate", dump_estimate,
                    "Write the final sensitivity estimate as JSON");
    add_override_flags(run, ov);

    std::vector<std::string> variant_names;
    auto* compare = app.add_subcommand("compare", "Run several variants with shared seeds");
    compare->add_option("scenario", scenario_path, "Scenario file")->required();
    compare
        ->add_option("--variants", variant_names,
                     "Variants to run (true_h estimated_h constant_h0 linear_feedforward)")
        ->expected(-2);
    compare->add_option("--out", out_dir, "Output directory");
    add_override_flags(compare, ov);

    std::string profiles_out = "profiles.csv";
    long long profiles_seed = 1;
    int profiles_horizon = 600;
    auto* make = app.add_subcommand("make-profiles",
                                    "Generate a synthetic profile CSV for a scenario's feeder");
    make->add_option("scenario", scenario_path, "Scenario file (feeder and knobs)")->required();
    make->add_option("--out", profiles_out, "Output CSV path");
    make->add_option("--seed", profiles_seed, "Generator seed");
    make->add_option("--horizon", profiles_horizon, "Number of steps");

    int tune_samples = 200;
    auto* tune = app.add_subcommand("tune",
                                    "Sample the closed-loop operator and print step-size bounds");
    tune->add_option("scenario", scenario_path, "Scenario file")->required();
    tune->add_option("--samples", tune_samples, "Number of sampled pairs");

    std::string trace_path;
    int replay_nu = 0, replay_ny = 0;
    ofo::NoiseModel replay_noise;
    double replay_sigma0 = 0.01;
    auto* offline = app.add_subcommand("estimate-offline",
                                       "Replay a recorded trace through the estimator");
    offline->add_option("trace", trace_path, "Trace CSV from a previous run")->required();
    offline->add_option("--nu", replay_nu, "Input dimension")->required();
    offline->add_option("--ny", replay_ny, "Output dimension")->required();
    offline->add_option("--sigma-p1", replay_noise.sigma_p1, "Process noise offset");
    offline->add_option("--sigma-p2", replay_noise.sigma_p2, "Process noise |du|^2 gain");
    offline->add_option("--sigma-m1", replay_noise.sigma_m1, "Measurement noise offset");
    offline->add_option("--sigma-m2", replay_noise.sigma_m2, "Measurement noise |du|^2 gain");
    offline->add_option("--sigma-m3", replay_noise.sigma_m3, "Measurement noise |du|^4 gain");
    offline->add_option("--sigma0", replay_sigma0, "Initial covariance scale");
    offline->add_option("--dump-estimate", dump_estimate,
                        "Write the final sensitivity estimate as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        const std::filesystem::path out(out_dir);

        if (*run) {
            ofo::Scenario sc = ofo::load_scenario(scenario_path);
            apply_overrides(sc, ov);
            const ofo::SimulationTrace trace = ofo::run_simulation(sc);
            std::filesystem::create_directories(out);
            const auto csv = out / (sc.source_path.stem().string() + "_" +
                                    ofo::to_string(sc.variant) + ".csv");
            ofo::export_trace_csv(trace, sc.feeder.n_u(), sc.feeder.n_y(), csv);
            std::cout << "variant " << ofo::to_string(sc.variant) << ", alpha "
                      << trace.alpha_used << ", " << trace.steps.size()
                      << " steps -> " << csv.string() << "\n";

            if (!dump_estimate.empty()) {
                // replay the exported trace so the dump reflects exactly what
                // an offline consumer of the CSV would reconstruct
                ofo::SensitivityEstimate est(Eigen::MatrixXd::Zero(sc.feeder.n_y(),
                                                                   sc.feeder.n_u()),
                                             sc.estimator.backend, sc.estimator.sigma0,
                                             sc.noise);
                ofo::replay_trace(ofo::read_csv(csv), est);
                dump_estimate_json(est, dump_estimate);
            }
            return finish_run(trace);
        }

        if (*compare) {
            ofo::Scenario sc = ofo::load_scenario(scenario_path);
            apply_overrides(sc, ov);
            std::vector<ofo::Variant> variants;
            if (variant_names.empty())
                variants = {ofo::Variant::TrueH, ofo::Variant::EstimatedH,
                            ofo::Variant::ConstantH0};
            else
                for (const std::string& name : variant_names)
                    variants.push_back(ofo::variant_from_string(name));

            const ofo::ComparisonReport report = ofo::compare_variants(sc, variants);
            std::filesystem::create_directories(out);
            const auto report_csv = out / (sc.source_path.stem().string() + "_report.csv");
            ofo::export_report_csv(report, report_csv);
            for (size_t i = 0; i < report.traces.size(); ++i) {
                const auto csv = out / (sc.source_path.stem().string() + "_" +
                                        ofo::to_string(variants[i]) + ".csv");
                ofo::export_trace_csv(report.traces[i], sc.feeder.n_u(), sc.feeder.n_y(),
                                      csv);
            }
            std::cout << "variant, final_third_tracking_error, total_violations, diverged\n";
            bool any_diverged = false, any_truncated = false;
            for (const ofo::VariantSummary& row : report.rows) {
                std::cout << ofo::to_string(row.variant) << ", "
                          << row.final_third_tracking_error << ", "
                          << row.total_violations << ", " << (row.diverged ? 1 : 0)
                          << "\n";
                any_diverged |= row.diverged;
                any_truncated |= row.truncated;
            }
            std::cout << "report -> " << report_csv.string() << "\n";
            if (any_truncated) return kExitNonConvergence;
            if (any_diverged) return kExitDiverged;
            return 0;
        }

        if (*make) {
            ofo::Scenario sc = ofo::load_scenario(scenario_path);
            ofo::SyntheticProfileSpec spec;
            spec.seed = static_cast<std::uint64_t>(profiles_seed);
            const ofo::ProfileSeries series =
                ofo::make_profiles(sc.feeder, spec, sc.box_params, profiles_horizon);
            ofo::write_profiles_csv(profiles_out, sc.feeder, series);
            std::cout << profiles_horizon << " steps -> " << profiles_out << "\n";
            return 0;
        }

        if (*tune) {
            const ofo::Scenario sc = ofo::load_scenario(scenario_path);
            const ofo::Plant plant(sc.feeder);
            ofo::ControllerConfig cfg = sc.controller;
            if (cfg.alpha == 0.0) cfg.alpha = 1.0;
            const ofo::OperatorEstimate est =
                ofo::probe_plant_operator(plant, sc.profiles.d[0], sc.profiles.box[0],
                                          cfg, tune_samples, sc.seeds.tuning);
            std::cout << "eta_hat     " << est.eta_hat << "\n"
                      << "L_hat       " << est.l_hat << "\n"
                      << "alpha_max   " << est.alpha_max << "\n"
                      << "epsilon     " << est.epsilon << " (at alpha " << cfg.alpha
                      << ")\n"
                      << "suggested   " << 0.3 * est.alpha_max << " (0.3 alpha_max)\n";
            return 0;
        }

        if (*offline) {
            if (replay_nu < 1 || replay_ny < 1)
                throw ofo::ValidationError("estimate-offline needs --nu and --ny >= 1");
            ofo::SensitivityEstimate est(Eigen::MatrixXd::Zero(replay_ny, replay_nu),
                                         ofo::CovarianceKind::KroneckerIso, replay_sigma0,
                                         replay_noise);
            const std::vector<double> errors =
                ofo::replay_trace(ofo::read_csv(trace_path), est);
            double mean = 0.0;
            for (double e : errors) mean += e;
            if (!errors.empty()) mean /= static_cast<double>(errors.size());
            std::cout << errors.size() << " replayed pairs, mean relative prediction error "
                      << mean << "\n";
            if (!dump_estimate.empty()) dump_estimate_json(est, dump_estimate);
            return 0;
        }
    } catch (const ofo::NonConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const ofo::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
