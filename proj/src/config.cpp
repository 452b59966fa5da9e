#include "tdas/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tdas/errors.hpp"
#include "tdas/io.hpp"
#include "tdas/units.hpp"

namespace tdas {

namespace {

namespace pt = boost::property_tree;

struct KeySpec {
    std::string_view name;
    std::optional<std::string_view> fallback;
};

using Section = std::map<std::string, std::string>;

const std::vector<KeySpec>& model_keys() {
    static const std::vector<KeySpec> keys = {
        {"omega0_2pi_mhz", "0.0083"}, {"omega_2pi_mhz", "14"}, {"U_2pi_mhz", "-8"},
        {"kappa_2pi_mhz", "1.25"},    {"N", "100000"},         {"g_over_gc", {}},
        {"g_over_threshold", {}},     {"g_2pi_mhz", {}},
    };
    return keys;
}

const std::vector<KeySpec>& feedback_keys() {
    static const std::vector<KeySpec> keys = {
        {"gain_fraction", {}},   {"r", {}},          {"s", {}}, {"kappa_b_2pi_mhz", {}},
        {"kappa_c_2pi_mhz", {}}, {"phi_rad", "0"}, {"tau_us", "0"},
    };
    return keys;
}

const std::vector<KeySpec>& scenario_keys(Scenario s) {
    static const std::vector<KeySpec> fixed = {{"g_over_gc", "1.1"}};
    static const std::vector<KeySpec> simulate = {
        {"t_end_ms", {}},      {"step_us", "auto"},    {"stride", "1000"},
        {"initial", "bloch_diagonal"}, {"initial_state", {}}, {"lowpass_cutoff_2pi_mhz", "auto"},
        {"relax_eps", "0.001"}, {"target", "auto"},
    };
    static const std::vector<KeySpec> ramp = {
        {"t0_ms", {}},      {"g_final_ratio", "1.5"}, {"t_end_ms", "t0"},
        {"step_us", "auto"}, {"stride", "1000"},       {"initial", "near_normal"},
        {"initial_state", {}},
    };
    static const std::vector<KeySpec> scan = {
        {"phase", "normal"}, {"k_over_half_kappa", "1"}, {"tau_us", "0:150:151"},
        {"collocation_degree", "40"}, {"approx", "true"},
    };
    static const std::vector<KeySpec> sweep = {{"side", "auto"}, {"g_over_gc", {}}};
    static const std::vector<KeySpec> exponent = {
        {"side", "below"}, {"window_lo", "0.0001"}, {"window_hi", "0.01"}, {"points", "20"},
    };
    switch (s) {
    case Scenario::FixedPoints: return fixed;
    case Scenario::Simulate: return simulate;
    case Scenario::Ramp: return ramp;
    case Scenario::StabilityScan: return scan;
    case Scenario::Fluctuations: return sweep;
    case Scenario::Exponent: return exponent;
    }
    return fixed;
}

bool uses_feedback(Scenario s) {
    return s == Scenario::Simulate || s == Scenario::Ramp || s == Scenario::Fluctuations ||
           s == Scenario::Exponent;
}

bool needs_coupling(Scenario s) { return s == Scenario::Simulate || s == Scenario::StabilityScan; }

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_number(std::string_view text, std::string_view what) {
    const std::string t = trim(text);
    double v = 0.0;
    const char* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ConfigError("invalid number '" + t + "' for " + std::string(what));
    }
    return v;
}

std::size_t parse_count(std::string_view text, std::string_view what) {
    const std::string t = trim(text);
    std::size_t v = 0;
    const char* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc{} || ptr != end || v == 0) {
        throw ConfigError("invalid positive integer '" + t + "' for " + std::string(what));
    }
    return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("invalid boolean '" + t + "' for " + std::string(what));
}

std::vector<double> parse_list(std::string_view text, std::string_view what) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_number(item, what));
    return out;
}

FixedPointKind parse_kind(std::string_view text, std::string_view what) {
    try {
        return fixed_point_kind_from_string(trim(text));
    } catch (const DomainError&) {
        throw ConfigError("invalid fixed point '" + trim(text) + "' for " + std::string(what) +
                          " (normal, inverted, sr_plus, sr_minus)");
    }
}

CriticalSide parse_side(std::string_view text, std::string_view what) {
    try {
        return critical_side_from_string(trim(text));
    } catch (const DomainError&) {
        throw ConfigError("invalid side '" + trim(text) + "' for " + std::string(what) +
                          " (below, above)");
    }
}

std::optional<double> parse_auto(std::string_view text, std::string_view what) {
    if (trim(text) == "auto") return std::nullopt;
    return parse_number(text, what);
}

InitialCondition parse_initial(const Section& sec, std::string_view scope, double N) {
    const std::string mode = sec.at("initial");
    const bool has_state = sec.count("initial_state") != 0;
    if (mode == "explicit") {
        if (!has_state) throw ConfigError(std::string(scope) + ".initial_state required for explicit");
        const auto v = parse_list(sec.at("initial_state"), std::string(scope) + ".initial_state");
        if (v.size() != 5) throw ConfigError(std::string(scope) + ".initial_state needs 5 numbers");
        return InitialCondition::explicit_state({v[0], v[1], v[2], v[3], v[4]});
    }
    if (has_state) throw ConfigError(std::string(scope) + ".initial_state only valid with explicit");
    if (mode == "bloch_diagonal") return InitialCondition::bloch_diagonal();
    if (mode == "near_normal") {
        if (!(N > 8.0)) throw ConfigError("near_normal initial state needs model.N > 8");
        return InitialCondition::near_normal(N);
    }
    throw ConfigError("invalid " + std::string(scope) +
                      ".initial '" + mode + "' (bloch_diagonal, near_normal, explicit)");
}

std::string format_number(double v) { return format_double(v); }

// Broadcast comma lists of feedback keys to a common case count.
std::vector<FeedbackParams> build_feedback(const Section& sec, double kappa) {
    std::map<std::string, std::vector<double>> lists;
    std::size_t n = 1;
    for (const auto& [key, value] : sec) {
        lists[key] = parse_list(value, "feedback." + key);
        n = std::max(n, lists[key].size());
    }
    for (const auto& [key, list] : lists) {
        if (list.size() != 1 && list.size() != n) {
            throw ConfigError("feedback." + key + " has " + std::to_string(list.size()) +
                              " entries, expected 1 or " + std::to_string(n));
        }
    }
    auto at = [&](const std::string& key, std::size_t i) {
        const auto& l = lists.at(key);
        return l.size() == 1 ? l[0] : l[i];
    };
    std::vector<FeedbackParams> out;
    for (std::size_t i = 0; i < n; ++i) {
        FeedbackParams f;
        const double tau = at("tau_us", i);
        if (!(tau >= 0.0)) throw ConfigError("feedback.tau_us must be >= 0");
        if (lists.count("gain_fraction")) {
            const double q = at("gain_fraction", i);
            if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("feedback.gain_fraction must lie in [0, 1]");
            f = FeedbackParams::with_gain(kappa, q * 0.5 * kappa, tau);
        } else {
            f.r = at("r", i);
            f.s = at("s", i);
            f.kappa_b = units::from_2pi_mhz(at("kappa_b_2pi_mhz", i));
            f.kappa_c = units::from_2pi_mhz(at("kappa_c_2pi_mhz", i));
            f.tau = tau;
        }
        f.phi = at("phi_rad", i);
        try {
            f.validate();
        } catch (const InvariantViolation& e) {
            throw ConfigError(std::string("feedback: ") + e.what());
        }
        out.push_back(f);
    }
    return out;
}

void resolve_feedback(Section& sec, const Section& model) {
    const bool fraction = sec.count("gain_fraction") != 0;
    const bool explicit_rs = sec.count("r") || sec.count("s") || sec.count("kappa_b_2pi_mhz") ||
                             sec.count("kappa_c_2pi_mhz");
    if (fraction && explicit_rs) {
        throw ConfigError("feedback: give either gain_fraction or r, s, kappa_b, kappa_c");
    }
    if (!explicit_rs) {
        if (!fraction) sec["gain_fraction"] = "0";
        return;
    }
    if (!sec.count("r") || !sec.count("s")) throw ConfigError("feedback: r and s go together");
    const double half = 0.5 * parse_number(model.at("kappa_2pi_mhz"), "model.kappa_2pi_mhz");
    for (const char* key : {"kappa_b_2pi_mhz", "kappa_c_2pi_mhz"}) {
        if (!sec.count(key)) sec[key] = format_number(half);
    }
}

} // namespace

std::string_view to_string(Scenario s) {
    switch (s) {
    case Scenario::FixedPoints: return "fixed-points";
    case Scenario::Simulate: return "simulate";
    case Scenario::Ramp: return "ramp";
    case Scenario::StabilityScan: return "stability-scan";
    case Scenario::Fluctuations: return "fluctuations";
    case Scenario::Exponent: return "exponent";
    }
    return "fixed-points";
}

const std::vector<std::string_view>& scenario_names() {
    static const std::vector<std::string_view> names = {
        "fixed-points", "simulate", "ramp", "stability-scan", "fluctuations", "exponent"};
    return names;
}

Scenario scenario_from_string(std::string_view name) {
    for (int i = 0; i < 6; ++i) {
        const auto s = static_cast<Scenario>(i);
        if (to_string(s) == name) return s;
    }
    std::string list;
    for (auto n : scenario_names()) list += (list.empty() ? "" : ", ") + std::string(n);
    throw ConfigError("unknown scenario '" + std::string(name) + "' (valid: " + list + ")");
}

std::vector<double> parse_grid(std::string_view text) {
    const std::string t = trim(text);
    if (t.find(':') == std::string::npos) {
        auto v = parse_list(t, "grid");
        return v;
    }
    auto parts = split(t, ':');
    bool log = false;
    if (parts.front() == "log") {
        log = true;
        parts.erase(parts.begin());
    }
    if (parts.size() != 3) throw ConfigError("grid '" + t + "' must be lo:hi:n or log:lo:hi:n");
    const double lo = parse_number(parts[0], "grid start");
    const double hi = parse_number(parts[1], "grid end");
    const std::size_t n = parse_count(parts[2], "grid size");
    if (log && !(lo > 0.0 && hi > 0.0)) throw ConfigError("log grid needs positive bounds");
    if (n == 1) return {lo};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n - 1);
        out[i] = log ? lo * std::pow(hi / lo, f)
                     : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

ScenarioConfig parse_config(std::string_view text) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }

    // An empty section and an empty top-level key look alike in the tree, so
    // read the headers from the text.
    std::set<std::string> headers;
    {
        std::istringstream in{std::string(text)};
        for (std::string line; std::getline(in, line);) {
            const std::string t = trim(line);
            if (t.size() >= 2 && t.front() == '[' && t.back() == ']') headers.insert(trim(t.substr(1, t.size() - 2)));
        }
    }
    std::map<std::string, std::string> top;
    std::map<std::string, Section> sections;
    for (const auto& [key, node] : tree) {
        if (!node.empty() || headers.count(key)) {
            Section& sec = sections[key];
            for (const auto& [k, v] : node) {
                if (!v.empty()) throw ConfigError("nested key " + key + "." + k);
                sec[k] = trim(v.data());
            }
        } else {
            top[key] = trim(node.data());
        }
    }
    for (const std::string& h : headers) (void)sections[h];

    for (const auto& [key, value] : top) {
        if (key != "scenario" && key != "label") throw ConfigError("unknown top-level key '" + key + "'");
    }
    if (!top.count("scenario")) throw ConfigError("missing top-level key 'scenario'");

    ScenarioConfig cfg;
    cfg.scenario = scenario_from_string(top.at("scenario"));
    const std::string own{to_string(cfg.scenario)};
    cfg.label = top.count("label") ? top.at("label") : "run";
    if (cfg.label.empty() || cfg.label.find_first_of("/\\ \t") != std::string::npos) {
        throw ConfigError("label must be a nonempty file-name fragment");
    }

    // Validate sections and keys, then fill defaults.
    for (const auto& [name, sec] : sections) {
        const std::vector<KeySpec>* spec = nullptr;
        if (name == "model") spec = &model_keys();
        else if (name == "feedback" && uses_feedback(cfg.scenario)) spec = &feedback_keys();
        else if (name == own) spec = &scenario_keys(cfg.scenario);
        if (!spec) throw ConfigError("section [" + name + "] is not used by scenario " + own);
        for (const auto& [key, value] : sec) {
            const bool known = std::any_of(spec->begin(), spec->end(),
                                           [&](const KeySpec& k) { return k.name == key; });
            if (!known) throw ConfigError("unknown key '" + key + "' in [" + name + "]");
        }
    }
    auto fill = [&](const std::string& name, const std::vector<KeySpec>& spec) {
        Section& sec = sections[name];
        for (const KeySpec& k : spec) {
            if (!sec.count(std::string(k.name)) && k.fallback) sec[std::string(k.name)] = *k.fallback;
        }
        return std::ref(sec);
    };
    Section& model = fill("model", model_keys());
    Section& own_sec = fill(own, scenario_keys(cfg.scenario));

    // Model block.
    ModelParams& p = cfg.model;
    p.omega0 = units::from_2pi_mhz(parse_number(model.at("omega0_2pi_mhz"), "model.omega0_2pi_mhz"));
    p.omega = units::from_2pi_mhz(parse_number(model.at("omega_2pi_mhz"), "model.omega_2pi_mhz"));
    p.U = units::from_2pi_mhz(parse_number(model.at("U_2pi_mhz"), "model.U_2pi_mhz"));
    p.kappa = units::from_2pi_mhz(parse_number(model.at("kappa_2pi_mhz"), "model.kappa_2pi_mhz"));
    p.N = parse_number(model.at("N"), "model.N");
    try {
        p.validate();
    } catch (const InvariantViolation& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    const int g_forms = static_cast<int>(model.count("g_over_gc") + model.count("g_over_threshold") +
                                         model.count("g_2pi_mhz"));
    if (g_forms > 1) throw ConfigError("model: give at most one of g_over_gc, g_over_threshold, g_2pi_mhz");
    if (needs_coupling(cfg.scenario) && g_forms == 0) {
        throw ConfigError("scenario " + own + " needs a coupling in [model]");
    }
    if (!needs_coupling(cfg.scenario) && g_forms != 0) {
        throw ConfigError("scenario " + own + " sets the coupling itself; remove it from [model]");
    }
    try {
        if (model.count("g_over_gc")) {
            p.g = parse_number(model.at("g_over_gc"), "model.g_over_gc") * critical_coupling(p);
        } else if (model.count("g_over_threshold")) {
            p.g = parse_number(model.at("g_over_threshold"), "model.g_over_threshold") *
                  threshold_coupling(p);
        } else if (model.count("g_2pi_mhz")) {
            p.g = units::from_2pi_mhz(parse_number(model.at("g_2pi_mhz"), "model.g_2pi_mhz"));
        }
    } catch (const DomainError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }

    if (uses_feedback(cfg.scenario)) {
        Section& fb = fill("feedback", feedback_keys());
        resolve_feedback(fb, model);
        cfg.feedback = build_feedback(fb, p.kappa);
    }

    const Section& s = own_sec;
    auto key = [&](const char* k) { return own + "." + k; };
    switch (cfg.scenario) {
    case Scenario::FixedPoints:
        cfg.fixed_points.g_over_gc = parse_grid(s.at("g_over_gc"));
        break;
    case Scenario::Simulate: {
        auto& o = cfg.simulate;
        if (!s.count("t_end_ms")) throw ConfigError("simulate.t_end_ms is required");
        o.t_end = units::ms_to_us(parse_number(s.at("t_end_ms"), key("t_end_ms")));
        if (!(o.t_end > 0.0)) throw ConfigError("simulate.t_end_ms must be positive");
        o.step = parse_auto(s.at("step_us"), key("step_us"));
        if (o.step && !(*o.step > 0.0)) throw ConfigError("simulate.step_us must be positive");
        o.stride = parse_count(s.at("stride"), key("stride"));
        o.initial = parse_initial(s, own, p.N);
        const auto cutoff = parse_auto(s.at("lowpass_cutoff_2pi_mhz"), key("lowpass_cutoff_2pi_mhz"));
        o.lowpass_cutoff = cutoff ? units::from_2pi_mhz(*cutoff) : 0.01 * std::abs(p.omega);
        if (!(o.lowpass_cutoff > 0.0)) throw ConfigError("simulate low-pass cutoff must be positive");
        o.relax_eps = parse_number(s.at("relax_eps"), key("relax_eps"));
        if (!(o.relax_eps > 0.0)) throw ConfigError("simulate.relax_eps must be positive");
        const std::string target = s.at("target");
        if (target == "auto") o.target.mode = TargetSpec::Mode::Auto;
        else if (target == "none") o.target.mode = TargetSpec::Mode::None;
        else {
            o.target.mode = TargetSpec::Mode::Kind;
            o.target.kind = parse_kind(target, key("target"));
        }
        break;
    }
    case Scenario::Ramp: {
        auto& o = cfg.ramp;
        if (!s.count("t0_ms")) throw ConfigError("ramp.t0_ms is required");
        for (double t0 : parse_list(s.at("t0_ms"), key("t0_ms"))) {
            if (!(t0 > 0.0)) throw ConfigError("ramp.t0_ms entries must be positive");
            o.t0.push_back(units::ms_to_us(t0));
        }
        o.g_final_ratio = parse_number(s.at("g_final_ratio"), key("g_final_ratio"));
        if (!(o.g_final_ratio > 0.0)) throw ConfigError("ramp.g_final_ratio must be positive");
        if (s.at("t_end_ms") != "t0") {
            o.t_end = units::ms_to_us(parse_number(s.at("t_end_ms"), key("t_end_ms")));
            if (!(*o.t_end > 0.0)) throw ConfigError("ramp.t_end_ms must be positive");
        }
        o.step = parse_auto(s.at("step_us"), key("step_us"));
        if (o.step && !(*o.step > 0.0)) throw ConfigError("ramp.step_us must be positive");
        o.stride = parse_count(s.at("stride"), key("stride"));
        o.initial = parse_initial(s, own, p.N);
        try {
            (void)threshold_coupling(p);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("ramp: ") + e.what());
        }
        break;
    }
    case Scenario::StabilityScan: {
        auto& o = cfg.scan;
        o.phase = parse_kind(s.at("phase"), key("phase"));
        for (double q : parse_grid(s.at("k_over_half_kappa"))) {
            if (!(q >= 0.0)) throw ConfigError("stability-scan.k_over_half_kappa must be >= 0");
            o.k.push_back(q * 0.5 * p.kappa);
        }
        o.tau = parse_grid(s.at("tau_us"));
        if (o.tau.empty() || !std::is_sorted(o.tau.begin(), o.tau.end()) || o.tau.front() < 0.0) {
            throw ConfigError("stability-scan.tau_us must be sorted and nonnegative");
        }
        o.collocation_degree = static_cast<int>(parse_count(s.at("collocation_degree"),
                                                            key("collocation_degree")));
        o.approx = parse_bool(s.at("approx"), key("approx"));
        break;
    }
    case Scenario::Fluctuations: {
        auto& o = cfg.sweep;
        if (s.at("side") != "auto") o.side = parse_side(s.at("side"), key("side"));
        if (!s.count("g_over_gc")) throw ConfigError("fluctuations.g_over_gc is required");
        o.g_over_gc = parse_grid(s.at("g_over_gc"));
        for (double r : o.g_over_gc) {
            const bool ok = o.side ? (*o.side == CriticalSide::Below ? r > 0.0 && r < 1.0 : r > 1.0)
                                   : r > 0.0 && r != 1.0;
            if (!ok) throw ConfigError("fluctuations.g_over_gc entry " + format_number(r) +
                                       " is not on the requested side of g_c");
        }
        try {
            (void)critical_coupling(p);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("fluctuations: ") + e.what());
        }
        break;
    }
    case Scenario::Exponent: {
        auto& o = cfg.exponent;
        o.side = parse_side(s.at("side"), key("side"));
        o.window_lo = parse_number(s.at("window_lo"), key("window_lo"));
        o.window_hi = parse_number(s.at("window_hi"), key("window_hi"));
        o.points = parse_count(s.at("points"), key("points"));
        if (!(o.window_lo > 0.0 && o.window_hi > o.window_lo && o.window_hi < 0.5) || o.points < 3) {
            throw ConfigError("exponent window needs 0 < window_lo < window_hi < 0.5, points >= 3");
        }
        try {
            (void)critical_coupling(p);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("exponent: ") + e.what());
        }
        break;
    }
    }

    cfg.resolved["model"] = model;
    if (uses_feedback(cfg.scenario)) cfg.resolved["feedback"] = sections.at("feedback");
    cfg.resolved[own] = own_sec;
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string render_manifest(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os << "; tdas-dicke " << kVersion << " resolved configuration\n";
    os << "scenario = " << to_string(cfg.scenario) << "\n";
    os << "label = " << cfg.label << "\n";
    const std::array<std::string, 3> order = {"model", "feedback", std::string(to_string(cfg.scenario))};
    for (const auto& name : order) {
        const auto it = cfg.resolved.find(name);
        if (it == cfg.resolved.end()) continue;
        os << "\n[" << name << "]\n";
        for (const auto& [k, v] : it->second) os << k << " = " << v << "\n";
    }
    return os.str();
}

} // namespace tdas
