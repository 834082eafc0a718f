#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace nonconv {

// Shortest decimal that reads back to the same double ("%.17g").
std::string format_double(double v);

// Comma-separated table with a header row and LF line endings.
class CsvTable {
public:
    using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string, bool>;

    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<Cell> cells);
    std::size_t rows() const noexcept { return rows_.size(); }
    const std::vector<std::string>& header() const noexcept { return header_; }

    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::string> rows_;
};

enum class Verdict { pass, fail, inconclusive };

std::string to_string(Verdict v);

struct RunManifest {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string version;
    std::string command;
    std::vector<std::pair<std::string, Verdict>> checks;
    std::vector<std::string> outputs;
    double wall_clock_seconds = 0.0;

    // Adds a check; a repeated name replaces the earlier verdict so every check appears once.
    void record(const std::string& name, Verdict verdict);
    bool failed() const;
    std::string json() const;
    void write(const std::string& path) const;
};

std::string version_string();

}  // namespace nonconv
