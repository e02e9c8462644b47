#include "ofo/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ofo {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_row(std::ofstream& out, const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i)
        out << cells[i] << (i + 1 < cells.size() ? "," : "\n");
}

} // namespace

std::vector<std::string> trace_columns(int n_u, int n_y) {
    std::vector<std::string> cols{"t"};
    for (int i = 0; i < n_u; ++i) cols.push_back("u_" + std::to_string(i));
    for (int i = 0; i < n_y; ++i) cols.push_back("y_" + std::to_string(i));
    for (int i = 0; i < n_u; ++i) cols.push_back("u_star_" + std::to_string(i));
    cols.insert(cols.end(), {"tracking_error", "rel_lin_error", "violation_count",
                             "sens_error", "cov_trace", "oracle_residual",
                             "oracle_iters"});
    return cols;
}

void export_trace_csv(const SimulationTrace& trace, int n_u, int n_y,
                      const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write trace CSV " + path.string());
    write_row(out, trace_columns(n_u, n_y));

    for (const StepRecord& s : trace.steps) {
        std::vector<std::string> cells;
        cells.push_back(std::to_string(s.t));
        for (int i = 0; i < n_u; ++i) cells.push_back(fmt(s.u(i)));
        for (int i = 0; i < n_y; ++i) cells.push_back(fmt(s.y(i)));
        for (int i = 0; i < n_u; ++i) cells.push_back(fmt(s.u_star(i)));
        cells.push_back(fmt(s.tracking_error));
        cells.push_back(fmt(s.rel_lin_error));
        cells.push_back(std::to_string(s.violations));
        cells.push_back(fmt(s.sens_error));
        cells.push_back(fmt(s.cov_trace));
        cells.push_back(fmt(s.oracle_residual));
        cells.push_back(std::to_string(s.oracle_iters));
        write_row(out, cells);
    }
}

void export_report_csv(const ComparisonReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write report CSV " + path.string());
    write_row(out, {"variant", "mean_tracking_error", "final_third_tracking_error",
                    "final_third_rel_lin_error", "total_violations", "diverged",
                    "truncated"});
    for (const VariantSummary& row : report.rows) {
        write_row(out, {to_string(row.variant), fmt(row.mean_tracking_error),
                        fmt(row.final_third_tracking_error),
                        fmt(row.final_third_rel_lin_error),
                        std::to_string(row.total_violations),
                        row.diverged ? "1" : "0", row.truncated ? "1" : "0"});
    }
}

int ParsedCsv::column(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

double ParsedCsv::number(int row, int col) const {
    const std::string& cell = rows.at(row).at(col);
    try {
        return std::stod(cell);
    } catch (const std::exception&) {
        throw ValidationError("CSV cell (" + std::to_string(row) + ", " +
                              columns.at(col) + ") is not numeric: \"" + cell + "\"");
    }
}

ParsedCsv read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open CSV " + path.string());

    ParsedCsv out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (header) {
            out.columns = std::move(cells);
            header = false;
        } else {
            out.rows.push_back(std::move(cells));
        }
    }
    if (out.columns.empty())
        throw ValidationError("CSV " + path.string() + " has no header");
    return out;
}

std::vector<double> replay_trace(const ParsedCsv& csv, SensitivityEstimate& estimate) {
    const int n_u = estimate.nu();
    const int n_y = estimate.ny();
    std::vector<int> u_cols(n_u), y_cols(n_y);
    for (int i = 0; i < n_u; ++i) {
        u_cols[i] = csv.column("u_" + std::to_string(i));
        if (u_cols[i] < 0)
            throw ValidationError("trace CSV lacks column u_" + std::to_string(i));
    }
    for (int i = 0; i < n_y; ++i) {
        y_cols[i] = csv.column("y_" + std::to_string(i));
        if (y_cols[i] < 0)
            throw ValidationError("trace CSV lacks column y_" + std::to_string(i));
    }

    std::vector<double> rel_errors;
    Eigen::VectorXd u_prev(n_u), y_prev(n_y);
    for (size_t row = 0; row < csv.rows.size(); ++row) {
        Eigen::VectorXd u(n_u), y(n_y);
        for (int i = 0; i < n_u; ++i) u(i) = csv.number(static_cast<int>(row), u_cols[i]);
        for (int i = 0; i < n_y; ++i) y(i) = csv.number(static_cast<int>(row), y_cols[i]);
        if (row >= 1) {
            const Eigen::VectorXd du = u - u_prev;
            const Eigen::VectorXd dy = y - y_prev;
            const double dy_norm = dy.norm();
            rel_errors.push_back(
                dy_norm > 0.0 ? (dy - estimate.predict_dy(du)).norm() / dy_norm : 0.0);
            estimate.update(du, dy);
        }
        u_prev = u;
        y_prev = y;
    }
    return rel_errors;
}

} // namespace ofo
