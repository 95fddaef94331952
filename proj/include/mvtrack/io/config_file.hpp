#pragma once

#include "mvtrack/errors.hpp"
#include "mvtrack/tracking/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mvtrack::io {

using tracking::TrackerConfig;

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& s, std::size_t line, const std::string& key) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ParseError(key + ": expected a number, got '" + s + "'", line);
    return v;
}

inline bool parse_bool(const std::string& s, std::size_t line, const std::string& key) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw ParseError(key + ": expected true or false, got '" + s + "'", line);
}

inline std::vector<double> parse_array(const std::string& s, std::size_t line, const std::string& key) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw ParseError(key + ": expected an array like [a, b, ...]", line);
    std::vector<double> out;
    std::stringstream ss(s.substr(1, s.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), line, key));
    return out;
}

using Setter = std::function<void(TrackerConfig&, const std::string&, std::size_t)>;

inline const std::map<std::string, Setter>& config_setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto num = [&t](const char* key, auto member) {
            t[key] = [member, key](TrackerConfig& c, const std::string& v, std::size_t line) {
                c.*member = parse_double(v, line, key);
            };
        };
        auto flag = [&t](const char* key, bool TrackerConfig::*member) {
            t[key] = [member, key](TrackerConfig& c, const std::string& v, std::size_t line) {
                c.*member = parse_bool(v, line, key);
            };
        };
        auto vec6 = [&t](const char* key, tracking::Vector6d TrackerConfig::*member) {
            t[key] = [member, key](TrackerConfig& c, const std::string& v, std::size_t line) {
                const auto a = parse_array(v, line, key);
                if (a.size() != 6) throw ParseError(std::string(key) + ": expected 6 numbers", line);
                for (int i = 0; i < 6; ++i) (c.*member)[i] = a[i];
            };
        };
        auto integer = [&t](const char* key, int TrackerConfig::*member) {
            t[key] = [member, key](TrackerConfig& c, const std::string& v, std::size_t line) {
                const double d = parse_double(v, line, key);
                if (d != std::floor(d)) throw ParseError(std::string(key) + ": expected an integer", line);
                c.*member = static_cast<int>(d);
            };
        };
        num("roi_weight", &TrackerConfig::roi_weight);
        num("query_weight", &TrackerConfig::query_weight);
        flag("use_roi_feature", &TrackerConfig::use_roi_feature);
        flag("use_query_feature", &TrackerConfig::use_query_feature);
        num("p_detect", &TrackerConfig::p_detect);
        num("p_survive", &TrackerConfig::p_survive);
        num("clutter_density", &TrackerConfig::clutter_density);
        num("gate_probability", &TrackerConfig::gate_probability);
        t["max_hypotheses"] = [](TrackerConfig& c, const std::string& v, std::size_t line) {
            if (v == "unlimited") {
                c.max_hypotheses = tracking::kUnlimitedHypotheses;
                return;
            }
            const double d = parse_double(v, line, "max_hypotheses");
            if (!(d >= 1.0) || d != std::floor(d))
                throw ParseError("max_hypotheses: expected a positive integer or \"unlimited\"", line);
            c.max_hypotheses = static_cast<std::size_t>(d);
        };
        num("hypothesis_prune", &TrackerConfig::hypothesis_prune);
        num("bernoulli_prune", &TrackerConfig::bernoulli_prune);
        num("extract_threshold", &TrackerConfig::extract_threshold);
        vec6("process_noise", &TrackerConfig::process_noise);
        vec6("measurement_noise", &TrackerConfig::measurement_noise);
        vec6("birth_noise", &TrackerConfig::birth_noise);
        t["ukf_spread"] = [](TrackerConfig& c, const std::string& v, std::size_t line) {
            c.unscented.spread = parse_double(v, line, "ukf_spread");
        };
        t["ukf_prior"] = [](TrackerConfig& c, const std::string& v, std::size_t line) {
            c.unscented.prior = parse_double(v, line, "ukf_prior");
        };
        t["ukf_kappa"] = [](TrackerConfig& c, const std::string& v, std::size_t line) {
            c.unscented.kappa = parse_double(v, line, "ukf_kappa");
        };
        num("feature_decay", &TrackerConfig::feature_decay);
        num("dims_smoothing", &TrackerConfig::dims_smoothing);
        num("birth_r_min", &TrackerConfig::birth_r_min);
        num("birth_r_max", &TrackerConfig::birth_r_max);
        integer("de_max_age", &TrackerConfig::de_max_age);
        integer("de_min_hits", &TrackerConfig::de_min_hits);
        return t;
    }();
    return table;
}

} // namespace detail

/// Every key accepted in a config file.
[[nodiscard]] inline std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : detail::config_setters()) out.push_back(k);
    return out;
}

/// Parses `key = value` lines over the defaults. `#` starts a comment;
/// values are numbers, true/false, "unlimited" (max_hypotheses only) or
/// arrays `[a, b, ...]`. Unknown and repeated keys are rejected.
[[nodiscard]] inline TrackerConfig parse_config(std::istream& is, TrackerConfig cfg = {}) {
    const auto& setters = detail::config_setters();
    std::set<std::string> seen;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
        const std::string key = detail::trim(text.substr(0, eq));
        std::string value = detail::trim(text.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        const auto it = setters.find(key);
        if (it == setters.end()) throw ParseError("unknown key '" + key + "'", line);
        if (!seen.insert(key).second) throw ParseError("duplicate key '" + key + "'", line);
        it->second(cfg, value, line);
    }
    cfg.validate();
    return cfg;
}

[[nodiscard]] inline TrackerConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    return parse_config(is);
}

/// Config text that parses back to `cfg`.
[[nodiscard]] inline std::string format_config(const TrackerConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    auto vec = [&os](const char* key, const tracking::Vector6d& v) {
        os << key << " = [";
        for (int i = 0; i < 6; ++i) os << (i ? ", " : "") << v[i];
        os << "]\n";
    };
    const auto b = [](bool v) { return v ? "true" : "false"; };
    os << "roi_weight = " << cfg.roi_weight << "\n"
       << "query_weight = " << cfg.query_weight << "\n"
       << "use_roi_feature = " << b(cfg.use_roi_feature) << "\n"
       << "use_query_feature = " << b(cfg.use_query_feature) << "\n"
       << "p_detect = " << cfg.p_detect << "\n"
       << "p_survive = " << cfg.p_survive << "\n"
       << "clutter_density = " << cfg.clutter_density << "\n"
       << "gate_probability = " << cfg.gate_probability << "\n";
    if (cfg.max_hypotheses == tracking::kUnlimitedHypotheses) os << "max_hypotheses = \"unlimited\"\n";
    else os << "max_hypotheses = " << cfg.max_hypotheses << "\n";
    os << "hypothesis_prune = " << cfg.hypothesis_prune << "\n"
       << "bernoulli_prune = " << cfg.bernoulli_prune << "\n"
       << "extract_threshold = " << cfg.extract_threshold << "\n";
    vec("process_noise", cfg.process_noise);
    vec("measurement_noise", cfg.measurement_noise);
    vec("birth_noise", cfg.birth_noise);
    os << "ukf_spread = " << cfg.unscented.spread << "\n"
       << "ukf_prior = " << cfg.unscented.prior << "\n"
       << "ukf_kappa = " << cfg.unscented.kappa << "\n"
       << "feature_decay = " << cfg.feature_decay << "\n"
       << "dims_smoothing = " << cfg.dims_smoothing << "\n"
       << "birth_r_min = " << cfg.birth_r_min << "\n"
       << "birth_r_max = " << cfg.birth_r_max << "\n"
       << "de_max_age = " << cfg.de_max_age << "\n"
       << "de_min_hits = " << cfg.de_min_hits << "\n";
    return os.str();
}

} // namespace mvtrack::io
