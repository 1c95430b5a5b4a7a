#include "qnd/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qnd/errors.hpp"

namespace qnd {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct KeyDefault {
    const char* key;
    const char* value;
};

// Defaults mirror the demonstrated operating point: eta = 0.1, Omega0/2pi =
// 90 kHz, 500 us ODF pulses at 2e6 W/m^2, N = 22 probes against a 0.25
// threshold, 97% D-state preparation, 1.17 mass correction. kappa empty means
// "calibrate from the anchor point at startup".
const KeyDefault kDefaults[] = {
    {"catalog_path", ""},
    {"intensity_w_m2", "2e6"},
    {"eta", "0.1"},
    {"omega0_hz", "90e3"},
    {"t_odf_s", "500e-6"},
    {"t2_s", "inf"},
    {"nbar_background", "0.05"},
    {"p_alpha", "0.52"},
    {"p_beta", "0.06"},
    {"n_rep", "22"},
    {"threshold_p", "0.25"},
    {"prep_success", "0.97"},
    {"mass_correction", "1.17"},
    {"seed", "1"},
    {"kappa", ""},
    {"pole_guard_hz", "1e3"},
    {"hfs_spacing_hz", "300e6"},
    {"n_max", "64"},
    {"fit_max_iterations", "200"},
};

}  // namespace

RunConfig::RunConfig() {
    for (const auto& d : kDefaults) values_[d.key] = d.value;
}

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& d : kDefaults) k.push_back(d.key);
        return k;
    }();
    return keys;
}

void RunConfig::check_key(const std::string& key) const {
    if (values_.find(key) == values_.end())
        throw ConfigError("unknown configuration key '" + key + "'");
}

void RunConfig::set(const std::string& key, const std::string& value) {
    check_key(key);
    values_[key] = value;
}

void RunConfig::load_stream(std::istream& in, const std::string& source_name) {
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source_name + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (values_.find(key) == values_.end())
            throw ConfigError(source_name + ":" + std::to_string(line_no) +
                              ": unknown configuration key '" + key + "'");
        values_[key] = value;
    }
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    load_stream(in, path);
}

void RunConfig::apply_overrides(const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must be key=value, got '" + o + "'");
        const std::string key = trim(o.substr(0, eq));
        const std::string value = trim(o.substr(eq + 1));
        check_key(key);
        values_[key] = value;
    }
}

bool RunConfig::has_value(const std::string& key) const {
    check_key(key);
    return !values_.at(key).empty();
}

std::string RunConfig::get_string(const std::string& key) const {
    check_key(key);
    return values_.at(key);
}

double RunConfig::get_double(const std::string& key) const {
    const std::string s = get_string(key);
    if (s == "inf" || s == "+inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    double value{};
    // from_chars(double) does not accept "2e6"-style exponents without a
    // decimal point on some libcs; go through strtod for config values.
    try {
        std::size_t pos = 0;
        value = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + s + "'");
    }
    return value;
}

long RunConfig::get_long(const std::string& key) const {
    const std::string s = get_string(key);
    long value{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("config key '" + key + "': not an integer: '" + s + "'");
    return value;
}

std::uint64_t RunConfig::get_seed() const {
    const std::string s = get_string("seed");
    std::uint64_t value{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("config key 'seed': not a 64-bit unsigned integer: '" + s + "'");
    return value;
}

std::map<std::string, std::string> RunConfig::snapshot() const { return values_; }

}
