#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qnd {

// Flat key = value run configuration ('#' comments, no sections). Values keep
// their text form here; typed getters parse on access. Precedence:
// command-line overrides > file values > built-in defaults. Unknown keys are
// a startup error.
class RunConfig {
public:
    RunConfig();  // built-in defaults (the published operating point)

    void load_file(const std::string& path);
    void load_stream(std::istream& in, const std::string& source_name);
    // "key=value" strings from the command line.
    void apply_overrides(const std::vector<std::string>& overrides);

    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;
    std::uint64_t get_seed() const;
    std::string get_string(const std::string& key) const;
    bool has_value(const std::string& key) const;  // non-empty value present

    void set(const std::string& key, const std::string& value);

    // Snapshot of every key in deterministic order (for result envelopes).
    std::map<std::string, std::string> snapshot() const;

    static const std::vector<std::string>& known_keys();

private:
    void check_key(const std::string& key) const;
    std::map<std::string, std::string> values_;
};

}
