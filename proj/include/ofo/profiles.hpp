#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ofo/controller.hpp"
#include "ofo/feeder.hpp"

namespace ofo {

/// Fixed per-scenario input limits that complement the time-varying
/// generation availability: slack voltage range and symmetric reactive
/// capability of each DER.
struct BoxParams {
    double slack_min = 0.97;
    double slack_max = 1.03;
    double q_max = 0.2;

    void validate() const;
};

/// Time-indexed disturbances and input boxes, one entry per step.
struct ProfileSeries {
    std::vector<Eigen::VectorXd> d;
    std::vector<InputBox> box;

    int horizon() const { return static_cast<int>(d.size()); }
};

/// Knobs of the bundled profile generator: loads follow a smoothed random
/// walk (optionally ramped over the horizon), generation availability is
/// piecewise constant with seeded step changes.
struct SyntheticProfileSpec {
    std::uint64_t seed = 1;
    double base_load_p = 0.10;   // p.u. consumption per load bus
    double base_load_q = 0.03;
    double bus_spread = 0.5;     // per-bus base factor 1 +- spread/2
    double walk_sigma = 0.002;   // relative walk increment per step
    double walk_smooth = 0.95;   // AR(1) smoothing of the walk
    double load_ramp = 0.0;      // extra relative load at the final step
    double avail_max = 0.2;      // DER nameplate, p.u.
    double avail_min_frac = 0.3; // availability level floor, fraction of nameplate
    int avail_step_every = 120;  // steps between availability changes

    void validate() const;
};

ProfileSeries make_profiles(const FeederModel& feeder, const SyntheticProfileSpec& spec,
                            const BoxParams& box_params, int horizon);

/// Reads a profile CSV: one row per step, consumption per load bus
/// (positive = consumption, negated into injections) and availability per
/// DER bus (active-power upper bound, lower bound 0). The header must match
/// the feeder layout exactly.
ProfileSeries load_profiles(const std::filesystem::path& path, const FeederModel& feeder,
                            const BoxParams& box_params);

/// Expected CSV header for a feeder: p_load_<id>,q_load_<id>...,p_avail_<id>...
std::vector<std::string> profile_columns(const FeederModel& feeder);

/// Writes the CSV form of a series (consumption sign restored).
void write_profiles_csv(const std::filesystem::path& path, const FeederModel& feeder,
                        const ProfileSeries& series);

} // namespace ofo
