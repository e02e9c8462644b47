#include "ofo/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ofo {

namespace {

// Minimal strict parser for the TOML-style scenario schema: [section]
// headers, key = value lines, values being quoted strings, numbers, bools
// or flat numeric arrays. Every key must be consumed by the loader;
// leftovers are reported as unknown keys with their path.
class KvFile {
public:
    static KvFile parse(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open scenario file " + path.string());
        KvFile kv;
        kv.path_ = path.string();

        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            strip_comment(line);
            const std::string text = trim(line);
            if (text.empty()) continue;

            if (text.front() == '[') {
                if (text.back() != ']')
                    kv.fail(lineno, "malformed section header");
                section = trim(text.substr(1, text.size() - 2));
                if (section.empty()) kv.fail(lineno, "empty section name");
                continue;
            }

            const auto eq = text.find('=');
            if (eq == std::string::npos)
                kv.fail(lineno, "expected key = value");
            const std::string key = trim(text.substr(0, eq));
            const std::string raw = trim(text.substr(eq + 1));
            if (key.empty()) kv.fail(lineno, "empty key");
            if (raw.empty()) kv.fail(lineno, "empty value for \"" + key + "\"");

            const std::string full = section.empty() ? key : section + "." + key;
            if (kv.entries_.count(full))
                kv.fail(lineno, "duplicate key \"" + full + "\"");

            Entry e;
            e.line = lineno;
            if (raw.front() == '"') {
                if (raw.size() < 2 || raw.back() != '"')
                    kv.fail(lineno, "unterminated string for \"" + full + "\"");
                e.kind = Entry::String;
                e.str = raw.substr(1, raw.size() - 2);
            } else if (raw == "true" || raw == "false") {
                e.kind = Entry::Bool;
                e.flag = (raw == "true");
            } else if (raw.front() == '[') {
                if (raw.back() != ']')
                    kv.fail(lineno, "unterminated array for \"" + full + "\"");
                e.kind = Entry::Array;
                const std::string body = raw.substr(1, raw.size() - 2);
                std::stringstream ss(body);
                std::string cell;
                while (std::getline(ss, cell, ',')) {
                    const std::string c = trim(cell);
                    if (c.empty()) kv.fail(lineno, "empty array element in \"" + full + "\"");
                    e.arr.push_back(kv.parse_number(c, full, lineno));
                }
            } else {
                e.kind = Entry::Number;
                e.num = kv.parse_number(raw, full, lineno);
            }
            kv.entries_.emplace(full, std::move(e));
        }
        return kv;
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    bool has_section(const std::string& name) const {
        const std::string prefix = name + ".";
        for (const auto& [k, v] : entries_)
            if (k.rfind(prefix, 0) == 0) return true;
        return false;
    }

    double number(const std::string& key) {
        Entry& e = require(key, Entry::Number, "number");
        return e.num;
    }
    double number(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }

    int integer(const std::string& key) {
        const double v = number(key);
        if (v != std::floor(v) || std::abs(v) > 1e15)
            throw ValidationError(path_ + ": key \"" + key + "\" must be an integer");
        return static_cast<int>(v);
    }
    int integer(const std::string& key, int fallback) {
        return has(key) ? integer(key) : fallback;
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const double v = number(key);
        if (v < 0.0 || v != std::floor(v))
            throw ValidationError(path_ + ": key \"" + key +
                                  "\" must be a non-negative integer");
        return static_cast<std::uint64_t>(v);
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        Entry& e = require(key, Entry::Bool, "boolean");
        return e.flag;
    }

    std::string string(const std::string& key) {
        Entry& e = require(key, Entry::String, "string");
        return e.str;
    }
    std::string string(const std::string& key, const std::string& fallback) {
        return has(key) ? string(key) : fallback;
    }

    std::vector<int> int_array(const std::string& key) {
        Entry& e = require(key, Entry::Array, "array");
        std::vector<int> out;
        for (double v : e.arr) {
            if (v != std::floor(v))
                throw ValidationError(path_ + ": array \"" + key +
                                      "\" must contain integers");
            out.push_back(static_cast<int>(v));
        }
        return out;
    }

    /// Throws if any key was never consumed (typo or unsupported option).
    void finish() const {
        for (const auto& [k, v] : entries_)
            if (!v.consumed)
                throw ValidationError(path_ + ": unknown key \"" + k + "\" (line " +
                                      std::to_string(v.line) + ")");
    }

private:
    struct Entry {
        enum Kind { Number, String, Bool, Array } kind = Number;
        double num = 0.0;
        std::string str;
        bool flag = false;
        std::vector<double> arr;
        int line = 0;
        bool consumed = false;
    };

    Entry& require(const std::string& key, Entry::Kind kind, const char* what) {
        auto it = entries_.find(key);
        if (it == entries_.end())
            throw ValidationError(path_ + ": missing required key \"" + key + "\"");
        if (it->second.kind != kind)
            throw ValidationError(path_ + ": key \"" + key + "\" must be a " +
                                  std::string(what));
        it->second.consumed = true;
        return it->second;
    }

    double parse_number(const std::string& text, const std::string& key, int line) {
        try {
            size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        } catch (const std::exception&) {
            fail(line, "cannot parse number \"" + text + "\" for \"" + key + "\"");
        }
        return 0.0; // unreachable
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ValidationError(path_ + ":" + std::to_string(line) + ": " + msg);
    }

    static void strip_comment(std::string& line) {
        bool quoted = false;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.erase(i);
                return;
            }
        }
    }

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, Entry> entries_;
    std::string path_;
};

} // namespace

std::string to_string(Variant v) {
    switch (v) {
        case Variant::TrueH: return "true_h";
        case Variant::EstimatedH: return "estimated_h";
        case Variant::ConstantH0: return "constant_h0";
        case Variant::LinearFeedforward: return "linear_feedforward";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& s) {
    if (s == "true_h") return Variant::TrueH;
    if (s == "estimated_h") return Variant::EstimatedH;
    if (s == "constant_h0") return Variant::ConstantH0;
    if (s == "linear_feedforward") return Variant::LinearFeedforward;
    throw ValidationError("unknown variant \"" + s +
                          "\" (expected true_h, estimated_h, constant_h0 or "
                          "linear_feedforward)");
}

void Scenario::validate() const {
    feeder.validate();
    if (horizon < 1) throw ValidationError("scenario: horizon must be >= 1");
    if (!(dt > 0.0)) throw ValidationError("scenario: dt must be positive");
    if (profiles.horizon() != horizon || static_cast<int>(profiles.box.size()) != horizon)
        throw ValidationError("scenario: profile length " +
                              std::to_string(profiles.horizon()) +
                              " does not match horizon " + std::to_string(horizon));

    ControllerConfig cfg_check = controller;
    if (cfg_check.alpha == 0.0) cfg_check.alpha = 1.0; // 0 = auto-select later
    cfg_check.validate(feeder.n_u());

    noise.validate();
    box_params.validate();
    if (!(estimator.sigma0 > 0.0))
        throw ValidationError("scenario: estimator sigma0 must be positive");
    if (estimator.window < 0)
        throw ValidationError("scenario: estimator window must be >= 0");
    if (!(oracle.tol > 0.0) || oracle.max_iterations < 1)
        throw ValidationError("scenario: bad oracle options");
    if (sim.divergence_steps < 1)
        throw ValidationError("scenario: divergence_steps must be >= 1");

    for (int t = 0; t < horizon; ++t) {
        if (profiles.d[t].size() != feeder.n_d())
            throw ValidationError("scenario: disturbance at step " + std::to_string(t) +
                                  " has wrong dimension");
        profiles.box[t].validate();
        if (profiles.box[t].size() != feeder.n_u())
            throw ValidationError("scenario: box at step " + std::to_string(t) +
                                  " has wrong dimension");
    }

    if (perturbation) {
        if (perturbation->max_fraction < 0.0 || perturbation->max_fraction >= 1.0)
            throw ValidationError("scenario: perturbation max_fraction must be in [0, 1)");
        for (int id : perturbation->lines)
            if (id < 0 || id >= static_cast<int>(feeder.lines.size()))
                throw ValidationError("scenario: perturbation line id " +
                                      std::to_string(id) + " out of range");
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    KvFile kv = KvFile::parse(path);
    const std::filesystem::path base = path.parent_path();

    Scenario sc;
    sc.source_path = path;

    const std::filesystem::path feeder_rel = kv.string("feeder");
    sc.feeder = load_feeder(feeder_rel.is_absolute() ? feeder_rel : base / feeder_rel);
    sc.horizon = kv.integer("horizon");
    sc.dt = kv.number("dt", 1.0);
    sc.variant = variant_from_string(kv.string("variant"));

    sc.box_params.slack_min = kv.number("box.slack_min", sc.box_params.slack_min);
    sc.box_params.slack_max = kv.number("box.slack_max", sc.box_params.slack_max);
    sc.box_params.q_max = kv.number("box.q_max", sc.box_params.q_max);

    const std::string profile_kind = kv.string("profiles.kind", "synthetic");
    if (profile_kind == "csv") {
        const std::filesystem::path rel = kv.string("profiles.path");
        const auto csv = rel.is_absolute() ? rel : base / rel;
        sc.profiles = load_profiles(csv, sc.feeder, sc.box_params);
        if (sc.profiles.horizon() < sc.horizon)
            throw ValidationError("profile CSV " + csv.string() + " has " +
                                  std::to_string(sc.profiles.horizon()) +
                                  " rows, scenario horizon is " +
                                  std::to_string(sc.horizon));
        sc.profiles.d.resize(sc.horizon);
        sc.profiles.box.resize(sc.horizon);
    } else if (profile_kind == "synthetic") {
        SyntheticProfileSpec spec;
        spec.seed = kv.seed("profiles.seed", spec.seed);
        spec.base_load_p = kv.number("profiles.base_load_p", spec.base_load_p);
        spec.base_load_q = kv.number("profiles.base_load_q", spec.base_load_q);
        spec.bus_spread = kv.number("profiles.bus_spread", spec.bus_spread);
        spec.walk_sigma = kv.number("profiles.walk_sigma", spec.walk_sigma);
        spec.walk_smooth = kv.number("profiles.walk_smooth", spec.walk_smooth);
        spec.load_ramp = kv.number("profiles.load_ramp", spec.load_ramp);
        spec.avail_max = kv.number("profiles.avail_max", spec.avail_max);
        spec.avail_min_frac = kv.number("profiles.avail_min_frac", spec.avail_min_frac);
        spec.avail_step_every = kv.integer("profiles.avail_step_every", spec.avail_step_every);
        sc.profiles = make_profiles(sc.feeder, spec, sc.box_params, sc.horizon);
    } else {
        throw ValidationError(path.string() + ": profiles.kind must be \"synthetic\" or \"csv\"");
    }

    const int n_der = static_cast<int>(sc.feeder.der_positions().size());
    ControllerConfig& cc = sc.controller;
    cc.alpha = kv.number("controller.alpha", 0.0);
    cc.rho = kv.number("controller.rho", cc.rho);
    cc.v_min = kv.number("controller.v_min", cc.v_min);
    cc.v_max = kv.number("controller.v_max", cc.v_max);
    cc.sigma_u = kv.number("controller.sigma_u", cc.sigma_u);
    cc.excitation_bound = kv.number("controller.excitation_bound", cc.excitation_bound);
    const double u_ref_slack = kv.number("controller.u_ref_slack", 1.0);
    const double u_ref_p = n_der > 0 ? kv.number("controller.u_ref_p") : 0.0;
    const double u_ref_q = kv.number("controller.u_ref_q", 0.0);
    cc.u_ref.resize(sc.feeder.n_u());
    cc.u_ref(0) = u_ref_slack;
    for (int k = 0; k < n_der; ++k) {
        cc.u_ref(1 + k) = u_ref_p;
        cc.u_ref(1 + n_der + k) = u_ref_q;
    }

    sc.noise.sigma_p1 = kv.number("estimator.sigma_p1", sc.noise.sigma_p1);
    sc.noise.sigma_p2 = kv.number("estimator.sigma_p2", sc.noise.sigma_p2);
    sc.noise.sigma_m1 = kv.number("estimator.sigma_m1", sc.noise.sigma_m1);
    sc.noise.sigma_m2 = kv.number("estimator.sigma_m2", sc.noise.sigma_m2);
    sc.noise.sigma_m3 = kv.number("estimator.sigma_m3", sc.noise.sigma_m3);
    sc.estimator.sigma0 = kv.number("estimator.sigma0", sc.estimator.sigma0);
    const std::string backend = kv.string("estimator.backend", "kronecker");
    if (backend == "kronecker")
        sc.estimator.backend = CovarianceKind::KroneckerIso;
    else if (backend == "full")
        sc.estimator.backend = CovarianceKind::Full;
    else
        throw ValidationError(path.string() +
                              ": estimator.backend must be \"kronecker\" or \"full\"");
    sc.estimator.window = kv.integer("estimator.window", 0);

    sc.oracle.enabled = kv.boolean("oracle.enabled", true);
    sc.oracle.alpha = kv.number("oracle.alpha", 0.0);
    sc.oracle.tol = kv.number("oracle.tol", sc.oracle.tol);
    sc.oracle.max_iterations = kv.integer("oracle.max_iterations", sc.oracle.max_iterations);

    sc.sim.divergence_threshold = kv.number("simulation.divergence_threshold", 0.0);
    sc.sim.divergence_steps = kv.integer("simulation.divergence_steps", 50);
    sc.sim.record_true_sens_error = kv.boolean("simulation.record_true_sens_error", false);

    sc.seeds.excitation = kv.seed("seeds.excitation", 0);
    sc.seeds.perturbation = kv.seed("seeds.perturbation", 0);
    sc.seeds.tuning = kv.seed("seeds.tuning", 12345);

    if (kv.has_section("perturbation")) {
        PerturbationSpec p;
        if (kv.has("perturbation.lines")) {
            p.lines = kv.int_array("perturbation.lines");
        } else {
            p.lines.resize(sc.feeder.lines.size());
            for (size_t i = 0; i < sc.feeder.lines.size(); ++i)
                p.lines[i] = static_cast<int>(i);
        }
        p.max_fraction = kv.number("perturbation.max_fraction", 0.2);
        sc.perturbation = std::move(p);
    }

    kv.finish();
    sc.validate();
    return sc;
}

} // namespace ofo
