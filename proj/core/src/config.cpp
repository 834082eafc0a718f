#include "nonconv/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nonconv/errors.hpp"

namespace nonconv {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
    const auto p = line.find_first_of("#;");
    return p == std::string::npos ? line : line.substr(0, p);
}

std::string collapse_space(const std::string& v) {
    std::string out;
    for (char c : v)
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    return out;
}

double parse_number(const std::string& text, std::size_t line) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
        throw ConfigError("expected a number, got '" + t + "'", line);
    return v;
}

// Splits the inside of one bracket level at top-level commas.
std::vector<std::string> split_list(const std::string& raw, std::size_t line) {
    const std::string v = trim(raw);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw ConfigError("expected a bracketed list", line);
    std::vector<std::string> items;
    int depth = 0;
    std::string cur;
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        const char c = v[k];
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (depth < 0) throw ConfigError("unbalanced brackets", line);
        if (c == ',' && depth == 0) {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (depth != 0) throw ConfigError("unbalanced brackets", line);
    if (!trim(cur).empty() || !items.empty()) items.push_back(trim(cur));
    for (const auto& it : items)
        if (it.empty()) throw ConfigError("empty list element", line);
    return items;
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) throw ConfigError("malformed section header", line);
            section = trim(s.substr(1, s.size() - 2));
            if (section.find_first_of("[] \t=") != std::string::npos) throw ConfigError("malformed section name", line);
            if (cfg.section_lines_.count(section)) throw ConfigError("duplicate section [" + section + "]", line);
            cfg.section_lines_[section] = line;
            cfg.sections_[section];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        if (section.empty()) throw ConfigError("key outside of any section", line);
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line);
        if (value.empty()) throw ConfigError("empty value for '" + key + "'", line);
        auto& sec = cfg.sections_[section];
        if (sec.count(key)) throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line);
        sec[key] = Entry{value, line};
    }
    cfg.last_line_ = line;
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) != 0;
}

std::size_t Config::section_line(const std::string& section) const {
    const auto it = section_lines_.find(section);
    return it == section_lines_.end() ? last_line_ : it->second;
}

const Config::Entry& Config::entry(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) throw ConfigError("missing section [" + section + "]", last_line_);
    const auto k = it->second.find(key);
    if (k == it->second.end()) throw ConfigError("missing key '" + key + "' in [" + section + "]", section_line(section));
    return k->second;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    return entry(section, key).value;
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const auto& e = entry(section, key);
    return parse_number(e.value, e.line);
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

std::uint64_t Config::get_uint(const std::string& section, const std::string& key) const {
    const auto& e = entry(section, key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size())
        throw ConfigError("expected a nonnegative integer for '" + key + "'", e.line);
    return v;
}

std::uint64_t Config::get_uint(const std::string& section, const std::string& key, std::uint64_t fallback) const {
    return has(section, key) ? get_uint(section, key) : fallback;
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key) const {
    const auto& e = entry(section, key);
    std::vector<double> out;
    for (const auto& item : split_list(e.value, e.line)) out.push_back(parse_number(item, e.line));
    return out;
}

std::vector<std::string> Config::get_words(const std::string& section, const std::string& key) const {
    const auto& e = entry(section, key);
    if (!e.value.empty() && e.value.front() == '[') return split_list(e.value, e.line);
    return {e.value};
}

std::vector<std::vector<double>> Config::get_matrix(const std::string& section, const std::string& key) const {
    const auto& e = entry(section, key);
    std::vector<std::vector<double>> rows;
    for (const auto& row : split_list(e.value, e.line)) {
        std::vector<double> r;
        for (const auto& item : split_list(row, e.line)) r.push_back(parse_number(item, e.line));
        rows.push_back(std::move(r));
    }
    return rows;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    auto& sec = sections_[section];
    const std::size_t line = sec.count(key) ? sec[key].line : 0;
    sec[key] = Entry{trim(value), line};
}

std::string Config::canonical_text() const {
    std::string out;
    for (const auto& [name, entries] : sections_)
        for (const auto& [key, e] : entries) out += name + "." + key + "=" + collapse_space(e.value) + "\n";
    return out;
}

std::uint64_t Config::canonical_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::vector<std::vector<double>> values_of(const Config& c, const std::string& section, const std::string& key) {
    const auto& e = c.entry(section, key);
    if (e.value.find('[', 1) != std::string::npos) return c.get_matrix(section, key);
    std::vector<std::vector<double>> out;
    for (double v : c.get_list(section, key)) out.push_back({v});
    return out;
}

std::vector<std::vector<std::int64_t>> integer_matrix(const Config& c, const std::string& section, const std::string& key) {
    const auto& e = c.entry(section, key);
    std::vector<std::vector<std::int64_t>> out;
    for (const auto& row : c.get_matrix(section, key)) {
        std::vector<std::int64_t> r;
        for (double v : row) {
            if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError("index coefficients must be integers", e.line);
            r.push_back(static_cast<std::int64_t>(v));
        }
        out.push_back(std::move(r));
    }
    return out;
}

template <class F>
auto at_line(std::size_t line, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const DomainError& e) {
        throw ConfigError(e.what(), line);
    }
}

ProcessModel build_model(const Config& c) {
    const auto& kind = c.entry("model", "kind");
    if (kind.value == "finite_markov") {
        const auto& t = c.entry("model", "transition");
        auto p = c.get_matrix("model", "transition");
        auto values = values_of(c, "model", "values");
        return at_line(t.line, [&] { return ProcessModel::finite_markov(Matrix::from_rows(p), std::move(values)); });
    }
    if (kind.value == "iid") {
        const auto& l = c.entry("model", "law");
        auto law = c.get_list("model", "law");
        auto values = values_of(c, "model", "values");
        return at_line(l.line, [&] { return ProcessModel::iid(std::move(law), std::move(values)); });
    }
    if (kind.value == "doubling_map") {
        const auto& lv = c.entry("model", "level");
        const auto level = c.get_uint("model", "level");
        if (c.has("model", "cell_values")) {
            auto cells = values_of(c, "model", "cell_values");
            return at_line(c.entry("model", "cell_values").line,
                           [&] { return ProcessModel::doubling_map(DyadicObservable::from_table(cells)); });
        }
        return at_line(lv.line, [&] { return ProcessModel::doubling_map(DyadicObservable::identity(static_cast<unsigned>(level))); });
    }
    throw ConfigError("unknown model kind '" + kind.value + "'", kind.line);
}

Observable build_observable(const Config& c) {
    const auto& kind = c.entry("observable", "kind");
    const auto& ell_entry = c.entry("observable", "ell");
    const auto ell = static_cast<std::size_t>(c.get_uint("observable", "ell"));
    return at_line(ell_entry.line, [&]() -> Observable {
        if (kind.value == "product") return Observable::product(ell, c.get_double("observable", "bound", 1.0));
        if (kind.value == "sum") return Observable::sum(ell, c.get_double("observable", "bound", 1.0));
        if (kind.value == "indicator_product") return Observable::indicator_product(ell, c.get_double("observable", "threshold"));
        if (kind.value == "clipped_polynomial")
            return Observable::clipped_polynomial(ell, c.get_list("observable", "coefficients"), c.get_double("observable", "clip"));
        throw ConfigError("unknown observable kind '" + kind.value + "'", kind.line);
    });
}

IndexFamily build_family(const Config& c, std::size_t ell) {
    const std::string kind = c.get_string("index", "kind", "linear");
    const std::size_t line = c.has("index", "kind") ? c.entry("index", "kind").line : c.section_line("index");
    return at_line(line, [&]() -> IndexFamily {
        if (kind == "linear") return IndexFamily::linear(ell);
        if (kind == "polynomial") return IndexFamily::polynomial(integer_matrix(c, "index", "coefficients"));
        if (kind == "power_sparse")
            return IndexFamily::power_sparse(integer_matrix(c, "index", "coefficients"),
                                             static_cast<unsigned>(c.get_uint("index", "power")));
        throw ConfigError("unknown index kind '" + kind + "'", line);
    });
}

}  // namespace

RunSpec load_run(const Config& c) {
    RunSpec spec;
    spec.config_hash = c.canonical_hash();
    auto model = std::make_shared<const ProcessModel>(build_model(c));
    const Observable f = build_observable(c);
    auto family = std::make_shared<const IndexFamily>(build_family(c, f.ell()));
    if (family->ell() != f.ell()) throw ConfigError("index family arity differs from the observable", c.section_line("index"));
    const MarginalLaw law = at_line(c.section_line("model"), [&] { return MarginalLaw::of(*model); });
    MonteCarloBudget mc{c.get_uint("observable", "mc_nodes", 0), c.get_uint("experiment", "seed", 0)};
    auto cf = std::make_shared<const CenteredObservable>(
        at_line(c.section_line("observable"), [&] { return decompose(f, law, mc); }));

    Experiment& e = spec.experiment;
    e.name = c.get_string("experiment", "name", "run");
    e.model = model;
    e.observable = cf;
    e.family = family;
    for (double v : c.get_list("experiment", "n_grid")) {
        if (v < 1 || v != std::floor(v)) throw ConfigError("N grid entries must be positive integers", c.entry("experiment", "n_grid").line);
        e.n_grid.push_back(static_cast<std::uint64_t>(v));
    }
    e.replicates = c.get_uint("experiment", "replicates");
    e.seed = c.get_uint("experiment", "seed", 0);
    e.workers = c.get_uint("experiment", "workers", 1);
    e.memory_budget_mb = c.get_uint("budget", "memory_mb", 0);
    e.sampling.max_index = c.get_uint("budget", "max_index", e.sampling.max_index);
    at_line(c.entry("experiment", "n_grid").line, [&] {
        e.validate();
        return 0;
    });

    spec.statistics = c.has("experiment", "statistics") ? c.get_words("experiment", "statistics")
                                                        : std::vector<std::string>{"sums"};
    static const std::vector<std::string> known{"sums", "tails", "variance", "cumulants", "kolmogorov"};
    bool needs_ci = false;
    for (const auto& s : spec.statistics) {
        if (std::find(known.begin(), known.end(), s) == known.end())
            throw ConfigError("unknown statistic '" + s + "'", c.entry("experiment", "statistics").line);
        needs_ci = needs_ci || s != "sums";
    }
    const std::size_t rep_line = c.entry("experiment", "replicates").line;
    if (needs_ci && e.replicates < min_ci_replicates)
        throw ConfigError("confidence intervals need at least 100 replicates", rep_line);
    if (std::find(spec.statistics.begin(), spec.statistics.end(), "tails") != spec.statistics.end())
        spec.tail_x = c.get_list("experiment", "tail_x");
    spec.cumulant_order = c.get_uint("experiment", "cumulant_order", 4);
    spec.gamma = c.get_double("experiment", "gamma", 1.0);
    return spec;
}

}  // namespace nonconv
