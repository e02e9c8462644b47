#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ofo/errors.hpp"

namespace ofo {

enum class BusKind { Slack, Load };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::Load;
    bool der = false; // load bus hosting a controllable generator
};

struct Line {
    int from = 0; // bus id
    int to = 0;   // bus id
    double r_pu = 0.0;
    double x_pu = 0.0;
};

/// Single-phase positive-sequence feeder: topology, series impedances and
/// bus roles. Defines the layouts of the input, disturbance and output
/// vectors used everywhere else:
///   u = [slack voltage, p at DER buses..., q at DER buses...]
///   d = [p at load buses..., q at load buses...]   (injections, loads < 0)
///   y = [|v| at every non-slack bus]
/// Ordering within each block follows the bus order of the feeder file.
struct FeederModel {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    double s_base_va = 1e6;
    double v_base_v = 400.0;

    int n_bus() const { return static_cast<int>(buses.size()); }
    int n_u() const { return 1 + 2 * static_cast<int>(der_positions().size()); }
    int n_d() const { return 2 * static_cast<int>(non_slack_positions().size()); }
    int n_y() const { return n_bus() - 1; }

    /// Position of the slack bus in `buses`.
    int slack_position() const;
    /// Positions of all non-slack buses, in file order. These carry the
    /// disturbance injections and the measured voltage outputs.
    std::vector<int> non_slack_positions() const;
    /// Positions of DER-flagged buses, in file order.
    std::vector<int> der_positions() const;
    /// Position in `buses` for a bus id; throws ValidationError if unknown.
    int position_of(int bus_id) const;

    /// Checks all structural invariants (single slack, unique ids, valid
    /// line endpoints, impedance signs, no duplicate lines, connectivity).
    void validate() const;
};

FeederModel load_feeder(const std::filesystem::path& path);

/// Grid admittance matrix in bus order: Y(i,j) = -1/(r+jx) for line (i,j),
/// diagonals carry the negated row sums (no shunt elements).
Eigen::MatrixXcd build_admittance(const FeederModel& feeder);

/// Scales (r, x) of each selected line by an independent factor drawn
/// uniformly from [1-max_fraction, 1+max_fraction]. Line ids are positions
/// in `feeder.lines`. Deterministic under `seed`; other lines untouched.
FeederModel perturb_admittance(const FeederModel& feeder,
                               std::span<const int> line_ids,
                               double max_fraction, std::uint64_t seed);

} // namespace ofo
