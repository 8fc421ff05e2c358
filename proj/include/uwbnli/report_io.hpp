#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "uwbnli/fiber.hpp"
#include "uwbnli/scenario.hpp"
#include "uwbnli/scenario_io.hpp"

namespace uwbnli {

inline constexpr std::string_view kToolVersion = "uwbnli 1.0.0";

/// 9 significant digits; scientific notation below 1e-3 in magnitude.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    if (x != 0.0 && std::abs(x) < 1e-3)
        std::snprintf(buf, sizeof buf, "%.8e", x);
    else
        std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string scenario_hash(const Scenario& s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_scenario(s, -1))));
    return buf;
}

/// Key/value lines written as comments at the top of every output file.
struct Metadata {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }
};

inline Metadata standard_metadata(const Scenario& s, std::string_view command) {
    Metadata m;
    m.add("tool", std::string(kToolVersion));
    m.add("command", std::string(command));
    m.add("scenario_hash", "fnv1a64:" + scenario_hash(s));
    const auto& v = s.solver;
    m.add("solver", "ode_step_km=" + format_number(v.ode_step_km) + " fit_samples=" + std::to_string(v.fit_samples) +
                        " series_cap=" + std::to_string(v.series_cap) + " step_tolerance=" + format_number(v.step_tolerance) +
                        " sigma_bounds=[max(" + format_number(v.sigma_min) + ",1/L)," + format_number(v.sigma_max) + "]");
    bool measured = false;
    for (const auto& sp : s.spans) measured = measured || sp.fiber.raman.is_measured();
    m.add("raman", measured ? "measured table" : "parametric silica stand-in (not a measured fiber)");
    m.add("rho", "identity");
    return m;
}

using Cell = std::variant<std::string, double, long long>;

/// Column-oriented output shared by the CSV and JSON writers.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::vector<Cell>> footer; // written after the rows (CSV) or under "totals" (JSON)
};

inline std::string cell_text(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    return std::to_string(std::get<long long>(c));
}

inline void write_metadata(std::ostream& os, const Metadata& m) {
    for (const auto& [k, v] : m.entries) os << "# " << k << ": " << v << '\n';
}

inline void write_csv(std::ostream& os, const Metadata& m, const Table& t) {
    write_metadata(os, m);
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    auto row_out = [&](const std::vector<Cell>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell_text(r[i]);
        os << '\n';
    };
    for (const auto& r : t.rows) row_out(r);
    for (const auto& r : t.footer) row_out(r);
}

inline nlohmann::json cell_json(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    if (const auto* d = std::get_if<double>(&c)) {
        if (!std::isfinite(*d)) return format_number(*d);
        return std::stod(format_number(*d));
    }
    return std::get<long long>(c);
}

/// JSON output with the same values as the CSV, rounded to the same digits.
/// The metadata lines become a leading "metadata" object.
inline void write_json(std::ostream& os, const Metadata& m, const Table& t) {
    nlohmann::ordered_json doc;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.entries) meta[k] = v;
    doc["metadata"] = meta;
    auto rows = [&](const std::vector<std::vector<Cell>>& src) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : src) {
            nlohmann::ordered_json o = nlohmann::ordered_json::object();
            for (std::size_t i = 0; i < r.size() && i < t.columns.size(); ++i)
                if (!(std::holds_alternative<std::string>(r[i]) && std::get<std::string>(r[i]).empty()))
                    o[t.columns[i]] = cell_json(r[i]);
            arr.push_back(o);
        }
        return arr;
    };
    doc["rows"] = rows(t.rows);
    if (!t.footer.empty()) doc["totals"] = rows(t.footer);
    os << doc.dump(2) << '\n';
}

enum class OutputFormat { Csv, Json };

inline void write_table(std::ostream& os, OutputFormat f, const Metadata& m, const Table& t) {
    if (f == OutputFormat::Csv)
        write_csv(os, m, t);
    else
        write_json(os, m, t);
}

} // namespace uwbnli
