#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "ofo/controller.hpp"
#include "ofo/estimator.hpp"
#include "ofo/feeder.hpp"
#include "ofo/profiles.hpp"

namespace ofo {

enum class Variant { TrueH, EstimatedH, ConstantH0, LinearFeedforward };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct EstimatorConfig {
    double sigma0 = 0.01; // initial covariance scale, Sigma_0 = sigma0^2 I
    CovarianceKind backend = CovarianceKind::KroneckerIso;
    int window = 0;       // excitation window length, 0 selects n_u
};

struct OracleConfig {
    bool enabled = true;
    double alpha = 0.0;   // 0 selects the sampled-operator optimum eta/L^2
    double tol = 1e-8;
    int max_iterations = 100000;
};

struct SimulationConfig {
    double divergence_threshold = 0.0; // 0 selects half the median box diagonal
    int divergence_steps = 50;
    bool record_true_sens_error = false;
};

struct Seeds {
    std::uint64_t excitation = 0;
    std::uint64_t perturbation = 0;
    std::uint64_t tuning = 12345;
};

struct PerturbationSpec {
    std::vector<int> lines; // positions in feeder.lines
    double max_fraction = 0.2;
};

/// A fully materialized experiment: feeder, horizon, per-step disturbances
/// and boxes, controller/estimator settings, seeds and variant selection.
struct Scenario {
    std::filesystem::path source_path;
    FeederModel feeder;
    int horizon = 0;
    double dt = 1.0;
    Variant variant = Variant::EstimatedH;
    ControllerConfig controller; // controller.alpha == 0 selects 0.3 * alpha_max
    NoiseModel noise;
    EstimatorConfig estimator;
    BoxParams box_params;
    OracleConfig oracle;
    SimulationConfig sim;
    Seeds seeds;
    std::optional<PerturbationSpec> perturbation;
    ProfileSeries profiles;

    void validate() const;
};

/// Parses and fully validates a scenario file (strict TOML-style key/value
/// schema, unknown keys rejected with their path). Relative paths inside the
/// file resolve against the file's directory.
Scenario load_scenario(const std::filesystem::path& path);

} // namespace ofo
