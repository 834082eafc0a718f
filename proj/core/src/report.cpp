#include "nonconv/report.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "nonconv/errors.hpp"

namespace nonconv {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw DomainError("CSV table needs at least one column");
}

namespace {

std::string render(const CsvTable::Cell& cell) {
    struct Visitor {
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(std::uint64_t v) const { return std::to_string(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(const std::string& s) const {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string out = "\"";
            for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
            return out + "\"";
        }
    };
    return std::visit(Visitor{}, cell);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << content;
    if (!out) throw Error("write failed for " + path);
}

}  // namespace

void CsvTable::add_row(std::vector<Cell> cells) {
    if (cells.size() != header_.size()) throw DomainError("CSV row width differs from the header");
    std::string line;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) line += ',';
        line += render(cells[k]);
    }
    rows_.push_back(std::move(line));
}

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t k = 0; k < header_.size(); ++k) {
        if (k) out += ',';
        out += header_[k];
    }
    out += '\n';
    for (const auto& r : rows_) out += r + '\n';
    return out;
}

void CsvTable::write(const std::string& path) const { write_file(path, str()); }

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "fail";
}

void RunManifest::record(const std::string& name, Verdict verdict) {
    for (auto& [n, v] : checks)
        if (n == name) {
            v = verdict;
            return;
        }
    checks.emplace_back(name, verdict);
}

bool RunManifest::failed() const {
    for (const auto& [n, v] : checks)
        if (v == Verdict::fail) return true;
    return false;
}

std::string RunManifest::json() const {
    nlohmann::ordered_json j;
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hash;
    j["seed"] = seed;
    j["version"] = version;
    j["command"] = command;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [n, v] : checks) c[n] = to_string(v);
    j["checks"] = c;
    j["outputs"] = outputs;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["note"] = "pass means not refuted at the conservative confidence edge; Monte Carlo cannot prove a bound";
    return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const { write_file(path, json()); }

std::string version_string() { return "0.1.0"; }

}  // namespace nonconv
