#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nonconv/montecarlo.hpp"

namespace nonconv {

// Flat `key = value` pairs grouped under `[section]` headers. `#` and `;` start comments.
// Lists are bracketed and comma separated; matrices are bracketed lists of rows.
class Config {
public:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const { return sections_.count(section) != 0; }
    const Entry& entry(const std::string& section, const std::string& key) const;
    // Line of the section header, or of the last line when the section is absent.
    std::size_t section_line(const std::string& section) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::uint64_t get_uint(const std::string& section, const std::string& key) const;
    std::uint64_t get_uint(const std::string& section, const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;
    std::vector<std::string> get_words(const std::string& section, const std::string& key) const;
    std::vector<std::vector<double>> get_matrix(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    // FNV-1a over the sorted, whitespace-normalized entries: independent of key order and layout.
    std::uint64_t canonical_hash() const;
    std::string canonical_text() const;

private:
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::map<std::string, std::size_t> section_lines_;
    std::size_t last_line_ = 0;
};

struct RunSpec {
    Experiment experiment;
    std::vector<std::string> statistics;  // sums, tails, variance, cumulants, kolmogorov
    std::vector<double> tail_x;
    std::size_t cumulant_order = 4;
    double gamma = 1.0;
    std::uint64_t config_hash = 0;
};

// Builds the experiment described by the [model], [observable], [index], [experiment] and [budget]
// sections. Validation failures raise ConfigError with the offending line.
RunSpec load_run(const Config& config);

}  // namespace nonconv
