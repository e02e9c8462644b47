#include "ofo/feeder.hpp"

#include <fstream>
#include <queue>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "ofo/rng.hpp"

namespace ofo {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known)
            throw ValidationError("feeder file: unknown key \"" + it.key() + "\" in " + where);
    }
}

} // namespace

int FeederModel::slack_position() const {
    for (int i = 0; i < n_bus(); ++i)
        if (buses[i].kind == BusKind::Slack) return i;
    throw ValidationError("feeder has no slack bus");
}

std::vector<int> FeederModel::non_slack_positions() const {
    std::vector<int> out;
    out.reserve(buses.size());
    for (int i = 0; i < n_bus(); ++i)
        if (buses[i].kind != BusKind::Slack) out.push_back(i);
    return out;
}

std::vector<int> FeederModel::der_positions() const {
    std::vector<int> out;
    for (int i = 0; i < n_bus(); ++i)
        if (buses[i].der) out.push_back(i);
    return out;
}

int FeederModel::position_of(int bus_id) const {
    for (int i = 0; i < n_bus(); ++i)
        if (buses[i].id == bus_id) return i;
    throw ValidationError("unknown bus id " + std::to_string(bus_id));
}

void FeederModel::validate() const {
    if (n_bus() < 2)
        throw ValidationError("feeder needs at least a slack and one load bus");

    int slack_count = 0;
    std::set<int> ids;
    for (const Bus& b : buses) {
        if (!ids.insert(b.id).second)
            throw ValidationError("duplicate bus id " + std::to_string(b.id));
        if (b.kind == BusKind::Slack) {
            ++slack_count;
            if (b.der)
                throw ValidationError("slack bus " + std::to_string(b.id) +
                                      " cannot host a DER");
        }
    }
    if (slack_count != 1)
        throw ValidationError("feeder must have exactly one slack bus, found " +
                              std::to_string(slack_count));

    std::set<std::pair<int, int>> seen;
    for (const Line& l : lines) {
        if (!ids.count(l.from) || !ids.count(l.to))
            throw ValidationError("line references unknown bus (" +
                                  std::to_string(l.from) + ", " +
                                  std::to_string(l.to) + ")");
        if (l.from == l.to)
            throw ValidationError("line from bus " + std::to_string(l.from) +
                                  " to itself");
        if (l.r_pu < 0.0)
            throw ValidationError("line (" + std::to_string(l.from) + ", " +
                                  std::to_string(l.to) + ") has r < 0");
        if (l.r_pu == 0.0 && l.x_pu == 0.0)
            throw ValidationError("line (" + std::to_string(l.from) + ", " +
                                  std::to_string(l.to) + ") has zero impedance");
        auto key = std::minmax(l.from, l.to);
        if (!seen.insert(key).second)
            throw ValidationError("duplicate line between buses " +
                                  std::to_string(l.from) + " and " +
                                  std::to_string(l.to));
    }

    // connectivity over the undirected line graph
    std::set<int> reached;
    std::queue<int> frontier;
    frontier.push(buses[0].id);
    reached.insert(buses[0].id);
    while (!frontier.empty()) {
        int at = frontier.front();
        frontier.pop();
        for (const Line& l : lines) {
            int next = -1;
            if (l.from == at) next = l.to;
            if (l.to == at) next = l.from;
            if (next >= 0 && !reached.count(next)) {
                reached.insert(next);
                frontier.push(next);
            }
        }
    }
    if (static_cast<int>(reached.size()) != n_bus())
        throw ValidationError("feeder graph is disconnected");
}

FeederModel load_feeder(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open feeder file " + path.string());

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("feeder file " + path.string() + ": " + e.what());
    }

    reject_unknown_keys(doc, {"buses", "lines", "s_base_va", "v_base_v"}, "top level");
    if (!doc.contains("buses") || !doc.contains("lines"))
        throw ValidationError("feeder file " + path.string() +
                              " must contain \"buses\" and \"lines\"");

    FeederModel feeder;
    feeder.s_base_va = doc.value("s_base_va", 1e6);
    feeder.v_base_v = doc.value("v_base_v", 400.0);

    for (const json& jb : doc["buses"]) {
        reject_unknown_keys(jb, {"id", "kind", "der"}, "bus entry");
        Bus b;
        if (!jb.contains("id") || !jb.contains("kind"))
            throw ValidationError("bus entry missing \"id\" or \"kind\"");
        b.id = jb["id"].get<int>();
        const std::string kind = jb["kind"].get<std::string>();
        if (kind == "slack")
            b.kind = BusKind::Slack;
        else if (kind == "load")
            b.kind = BusKind::Load;
        else
            throw ValidationError("bus " + std::to_string(b.id) +
                                  ": unknown kind \"" + kind + "\"");
        b.der = jb.value("der", false);
        feeder.buses.push_back(b);
    }

    for (const json& jl : doc["lines"]) {
        reject_unknown_keys(jl, {"from", "to", "r_pu", "x_pu"}, "line entry");
        Line l;
        if (!jl.contains("from") || !jl.contains("to") || !jl.contains("r_pu") ||
            !jl.contains("x_pu"))
            throw ValidationError("line entry missing from/to/r_pu/x_pu");
        l.from = jl["from"].get<int>();
        l.to = jl["to"].get<int>();
        l.r_pu = jl["r_pu"].get<double>();
        l.x_pu = jl["x_pu"].get<double>();
        feeder.lines.push_back(l);
    }

    feeder.validate();
    return feeder;
}

Eigen::MatrixXcd build_admittance(const FeederModel& feeder) {
    feeder.validate();
    const int n = feeder.n_bus();
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    for (const Line& l : feeder.lines) {
        const int i = feeder.position_of(l.from);
        const int j = feeder.position_of(l.to);
        const std::complex<double> y_line =
            1.0 / std::complex<double>(l.r_pu, l.x_pu);
        y(i, j) -= y_line;
        y(j, i) -= y_line;
        y(i, i) += y_line;
        y(j, j) += y_line;
    }
    return y;
}

FeederModel perturb_admittance(const FeederModel& feeder,
                               std::span<const int> line_ids,
                               double max_fraction, std::uint64_t seed) {
    if (max_fraction < 0.0 || max_fraction >= 1.0)
        throw ValidationError("perturbation max_fraction must be in [0, 1)");
    FeederModel out = feeder;
    Rng rng(seed);
    for (int id : line_ids) {
        if (id < 0 || id >= static_cast<int>(out.lines.size()))
            throw ValidationError("perturbation references unknown line id " +
                                  std::to_string(id));
        const double factor = rng.uniform(1.0 - max_fraction, 1.0 + max_fraction);
        out.lines[id].r_pu *= factor;
        out.lines[id].x_pu *= factor;
    }
    return out;
}

} // namespace ofo
