#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ofo/simulation.hpp"

namespace ofo {

/// Column names of the trace CSV for a given input/output dimension:
/// t, u_*, y_*, u_star_*, tracking_error, rel_lin_error, violation_count,
/// sens_error, cov_trace, oracle_residual, oracle_iters.
std::vector<std::string> trace_columns(int n_u, int n_y);

/// One row per step, full double precision (round-trips exactly).
void export_trace_csv(const SimulationTrace& trace, int n_u, int n_y,
                      const std::filesystem::path& path);

/// One row per variant with the summary metrics.
void export_report_csv(const ComparisonReport& report, const std::filesystem::path& path);

struct ParsedCsv {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
    double number(int row, int col) const;
};

ParsedCsv read_csv(const std::filesystem::path& path);

/// Replays the (du, dy) stream recorded in a trace CSV through a fresh
/// estimate; the estimation is independent of whatever policy produced the
/// inputs. Returns the per-step relative prediction errors.
std::vector<double> replay_trace(const ParsedCsv& csv, SensitivityEstimate& estimate);

} // namespace ofo
