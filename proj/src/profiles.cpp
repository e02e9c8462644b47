#include "ofo/profiles.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ofo/rng.hpp"

namespace ofo {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

InputBox assemble_box(const FeederModel& feeder, const BoxParams& p,
                      const Eigen::VectorXd& avail) {
    const int n_der = static_cast<int>(feeder.der_positions().size());
    InputBox box;
    box.lower.resize(feeder.n_u());
    box.upper.resize(feeder.n_u());
    box.lower(0) = p.slack_min;
    box.upper(0) = p.slack_max;
    for (int k = 0; k < n_der; ++k) {
        box.lower(1 + k) = 0.0;
        box.upper(1 + k) = avail(k);
        box.lower(1 + n_der + k) = -p.q_max;
        box.upper(1 + n_der + k) = p.q_max;
    }
    return box;
}

} // namespace

void BoxParams::validate() const {
    if (!(slack_min > 0.0) || !(slack_min <= slack_max))
        throw ValidationError("box: need 0 < slack_min <= slack_max");
    if (q_max < 0.0) throw ValidationError("box: q_max must be >= 0");
}

void SyntheticProfileSpec::validate() const {
    if (base_load_p < 0.0 || base_load_q < 0.0)
        throw ValidationError("profiles: base loads must be >= 0");
    if (walk_sigma < 0.0 || walk_smooth < 0.0 || walk_smooth >= 1.0)
        throw ValidationError("profiles: need walk_sigma >= 0 and walk_smooth in [0, 1)");
    if (bus_spread < 0.0 || bus_spread > 1.0)
        throw ValidationError("profiles: bus_spread must be in [0, 1]");
    if (avail_max < 0.0 || avail_min_frac < 0.0 || avail_min_frac > 1.0)
        throw ValidationError("profiles: bad availability parameters");
    if (avail_step_every < 1)
        throw ValidationError("profiles: avail_step_every must be >= 1");
}

ProfileSeries make_profiles(const FeederModel& feeder, const SyntheticProfileSpec& spec,
                            const BoxParams& box_params, int horizon) {
    spec.validate();
    box_params.validate();
    if (horizon < 1) throw ValidationError("profiles: horizon must be >= 1");

    const int n_load = static_cast<int>(feeder.non_slack_positions().size());
    const int n_der = static_cast<int>(feeder.der_positions().size());
    Rng rng(spec.seed);

    Eigen::VectorXd bus_factor(n_load);
    for (int i = 0; i < n_load; ++i)
        bus_factor(i) = 1.0 + spec.bus_spread * (rng.uniform() - 0.5);

    ProfileSeries out;
    out.d.reserve(horizon);
    out.box.reserve(horizon);

    Eigen::VectorXd walk = Eigen::VectorXd::Zero(n_load);
    Eigen::VectorXd avail = Eigen::VectorXd::Zero(n_der);
    for (int t = 0; t < horizon; ++t) {
        if (t % spec.avail_step_every == 0) {
            for (int k = 0; k < n_der; ++k)
                avail(k) = spec.avail_max * rng.uniform(spec.avail_min_frac, 1.0);
        }
        const double ramp =
            1.0 + (horizon > 1 ? spec.load_ramp * t / (horizon - 1.0) : 0.0);
        Eigen::VectorXd d(2 * n_load);
        for (int i = 0; i < n_load; ++i) {
            walk(i) = spec.walk_smooth * walk(i) + spec.walk_sigma * rng.gaussian();
            const double scale = std::max(0.0, ramp * bus_factor(i) * (1.0 + walk(i)));
            d(i) = -spec.base_load_p * scale; // consumption enters as negative injection
            d(n_load + i) = -spec.base_load_q * scale;
        }
        out.d.push_back(std::move(d));
        out.box.push_back(assemble_box(feeder, box_params, avail));
    }
    return out;
}

std::vector<std::string> profile_columns(const FeederModel& feeder) {
    std::vector<std::string> cols;
    for (int pos : feeder.non_slack_positions())
        cols.push_back("p_load_" + std::to_string(feeder.buses[pos].id));
    for (int pos : feeder.non_slack_positions())
        cols.push_back("q_load_" + std::to_string(feeder.buses[pos].id));
    for (int pos : feeder.der_positions())
        cols.push_back("p_avail_" + std::to_string(feeder.buses[pos].id));
    return cols;
}

ProfileSeries load_profiles(const std::filesystem::path& path, const FeederModel& feeder,
                            const BoxParams& box_params) {
    box_params.validate();
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open profile CSV " + path.string());

    const std::vector<std::string> expected = profile_columns(feeder);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError("profile CSV " + path.string() + " is empty");

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    for (const std::string& col : expected) {
        if (std::find(header.begin(), header.end(), col) == header.end())
            throw ValidationError("profile CSV missing column \"" + col + "\"");
    }
    for (const std::string& col : header) {
        if (std::find(expected.begin(), expected.end(), col) == expected.end())
            throw ValidationError("profile CSV has unexpected column \"" + col + "\"");
    }
    std::vector<int> order(expected.size());
    for (size_t i = 0; i < expected.size(); ++i)
        order[i] = static_cast<int>(std::find(header.begin(), header.end(), expected[i]) -
                                    header.begin());

    const int n_load = static_cast<int>(feeder.non_slack_positions().size());
    const int n_der = static_cast<int>(feeder.der_positions().size());

    ProfileSeries out;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size())
            throw ValidationError("profile CSV row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " cells, header has " +
                                  std::to_string(header.size()));
        Eigen::VectorXd values(expected.size());
        for (size_t i = 0; i < expected.size(); ++i) {
            const std::string& raw = cells[order[i]];
            try {
                size_t used = 0;
                values(i) = std::stod(raw, &used);
                if (used != raw.size()) throw std::invalid_argument(raw);
            } catch (const std::exception&) {
                throw ValidationError("profile CSV row " + std::to_string(row) +
                                      ", column \"" + expected[i] +
                                      "\": cannot parse \"" + raw + "\"");
            }
        }
        Eigen::VectorXd d(2 * n_load);
        // consumption columns flip sign exactly once, here at ingestion
        for (int i = 0; i < 2 * n_load; ++i) d(i) = -values(i);
        Eigen::VectorXd avail(n_der);
        for (int k = 0; k < n_der; ++k) {
            avail(k) = values(2 * n_load + k);
            if (avail(k) < 0.0)
                throw ValidationError("profile CSV row " + std::to_string(row) +
                                      ": negative availability");
        }
        out.d.push_back(std::move(d));
        out.box.push_back(assemble_box(feeder, box_params, avail));
    }
    if (out.d.empty())
        throw ValidationError("profile CSV " + path.string() + " has no data rows");
    return out;
}

void write_profiles_csv(const std::filesystem::path& path, const FeederModel& feeder,
                        const ProfileSeries& series) {
    std::ofstream outf(path);
    if (!outf) throw ValidationError("cannot write profile CSV " + path.string());

    const std::vector<std::string> cols = profile_columns(feeder);
    for (size_t i = 0; i < cols.size(); ++i)
        outf << cols[i] << (i + 1 < cols.size() ? "," : "\n");

    const int n_load = static_cast<int>(feeder.non_slack_positions().size());
    const int n_der = static_cast<int>(feeder.der_positions().size());
    for (int t = 0; t < series.horizon(); ++t) {
        const Eigen::VectorXd& d = series.d[t];
        const InputBox& box = series.box[t];
        std::vector<std::string> cells;
        for (int i = 0; i < 2 * n_load; ++i) cells.push_back(fmt_double(-d(i)));
        for (int k = 0; k < n_der; ++k) cells.push_back(fmt_double(box.upper(1 + k)));
        for (size_t i = 0; i < cells.size(); ++i)
            outf << cells[i] << (i + 1 < cells.size() ? "," : "\n");
    }
}

} // namespace ofo
