#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwbnli/error.hpp"
#include "uwbnli/fiber.hpp"
#include "uwbnli/scenario.hpp"
#include "uwbnli/table.hpp"
#include "uwbnli/transceiver.hpp"
#include "uwbnli/units.hpp"

// JSON scenario documents. The format is described in docs/scenario-format.md.

namespace uwbnli {

namespace io_detail {

using json = nlohmann::json;

/// Frequency range covered by the table built for a scalar (flat) loss value.
inline constexpr double kFlatLossLow = 100.0;
inline constexpr double kFlatLossHigh = 400.0;

inline std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
inline std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

inline void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    require_object(j, path);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(child(path, it.key()), "unknown key");
    }
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
    return v;
}

inline double number_at(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    return number(obj.at(key), child(path, key));
}

inline int integer_at(const json& obj, const std::string& path, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(child(path, key), "expected an integer");
    return v.get<int>();
}

inline std::string string_at(const json& obj, const std::string& path, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(child(path, key), "expected a string");
    return v.get<std::string>();
}

inline std::vector<double> number_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], child(path, i)));
    return out;
}

/// [[x, y], ...] -> table.
inline LinearTable pair_table(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of [x, y] pairs");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = child(path, i);
        if (!j[i].is_array() || j[i].size() != 2) throw ConfigError(p, "expected an [x, y] pair");
        x.push_back(number(j[i][0], child(p, 0)));
        y.push_back(number(j[i][1], child(p, 1)));
    }
    try {
        return LinearTable(std::move(x), std::move(y));
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

inline json table_json(const LinearTable& t) {
    json arr = json::array();
    for (std::size_t i = 0; i < t.xs().size(); ++i) arr.push_back(json::array({t.xs()[i], t.ys()[i]}));
    return arr;
}

/// Rows of a delimited text file with a header line. Separators: comma,
/// semicolon, tab or spaces. Lines starting with '#' are skipped.
struct DelimitedTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name, const std::string& path) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ConfigError(path, "file has no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

inline std::vector<std::string> split_fields(const std::string& line) {
    std::string s = line;
    for (char& c : s)
        if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string f;
    while (is >> f) out.push_back(f);
    return out;
}

inline DelimitedTable read_delimited(const std::filesystem::path& file, const std::string& path) {
    std::ifstream in(file);
    if (!in) throw ConfigError(path, "cannot open file " + file.string());
    DelimitedTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto fields = split_fields(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw ConfigError(path, file.string() + ":" + std::to_string(line_no) + ": wrong number of columns");
        std::vector<double> row;
        for (const auto& f : fields) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(f, &used));
                if (used != f.size()) throw std::invalid_argument(f);
            } catch (const std::exception&) {
                throw ConfigError(path, file.string() + ":" + std::to_string(line_no) + ": not a number: " + f);
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ConfigError(path, "file " + file.string() + " has no header");
    return t;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file) {
    std::filesystem::path p(file);
    return p.is_absolute() ? p : base / p;
}

// --- parse ----------------------------------------------------------------

inline double power_w(const json& obj, const std::string& path, std::optional<double> fallback, bool required) {
    const bool w = obj.contains("launch_power_w"), d = obj.contains("launch_power_dbm");
    if (w && d) throw ConfigError(path, "give launch_power_w or launch_power_dbm, not both");
    if (w) {
        const double v = number(obj.at("launch_power_w"), child(path, "launch_power_w"));
        if (v < 0.0) throw ConfigError(child(path, "launch_power_w"), "must be >= 0");
        return v;
    }
    if (d) return dbm_to_watt(number(obj.at("launch_power_dbm"), child(path, "launch_power_dbm")));
    if (fallback) return *fallback;
    if (required) throw ConfigError(path, "missing launch power");
    return -1.0;
}

inline ModulationFormat format_at(const json& obj, const std::string& path, ModulationFormat fallback) {
    if (!obj.contains("format")) return fallback;
    const auto s = string_at(obj, path, "format", "");
    auto f = parse_modulation_format(s);
    if (!f) throw ConfigError(child(path, "format"), "unknown modulation format '" + s + "'");
    return *f;
}

inline BandLabel band_label(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a band label");
    auto b = parse_band_label(j.get<std::string>());
    if (!b) throw ConfigError(path, "unknown band '" + j.get<std::string>() + "'");
    return *b;
}

inline RamanModel parse_raman(const json& j, const std::string& path, const std::filesystem::path& base) {
    require_object(j, path);
    RamanModel m;
    const auto model = string_at(j, path, "model", "parametric");
    const auto scaling = string_at(j, path, "scaling", "linear-in-pump");
    if (scaling == "linear-in-pump")
        m.scaling = RamanScaling::LinearInPump;
    else if (scaling == "none")
        m.scaling = RamanScaling::None;
    else
        throw ConfigError(child(path, "scaling"), "expected 'linear-in-pump' or 'none'");
    if (model == "parametric") {
        check_keys(j, path, {"model", "scaling", "peak_value", "peak_shift_thz", "reference_pump_thz"});
        RamanModel::Parametric p;
        p.peak_value = number_at(j, path, "peak_value", p.peak_value);
        p.peak_shift_thz = number_at(j, path, "peak_shift_thz", p.peak_shift_thz);
        p.reference_pump_thz = number_at(j, path, "reference_pump_thz", p.reference_pump_thz);
        m.form = p;
    } else if (model == "measured") {
        check_keys(j, path, {"model", "scaling", "file", "pump_thz", "shift_thz", "gain"});
        RamanModel::Measured t;
        if (j.contains("file")) {
            if (j.contains("pump_thz") || j.contains("shift_thz") || j.contains("gain"))
                throw ConfigError(path, "give either 'file' or inline pump_thz/shift_thz/gain");
            const auto fpath = child(path, "file");
            const auto tab = read_delimited(resolve(base, string_at(j, path, "file", "")), fpath);
            const auto cp = tab.column("pump_thz", fpath), cs = tab.column("shift_thz", fpath),
                       cg = tab.column("gain", fpath);
            std::set<double> pumps, shifts;
            for (const auto& r : tab.rows) {
                pumps.insert(r[cp]);
                shifts.insert(r[cs]);
            }
            t.pump_thz.assign(pumps.begin(), pumps.end());
            t.shift_thz.assign(shifts.begin(), shifts.end());
            t.gain.assign(t.pump_thz.size() * t.shift_thz.size(), std::nan(""));
            for (const auto& r : tab.rows) {
                const auto pi = static_cast<std::size_t>(std::lower_bound(t.pump_thz.begin(), t.pump_thz.end(), r[cp]) - t.pump_thz.begin());
                const auto si = static_cast<std::size_t>(std::lower_bound(t.shift_thz.begin(), t.shift_thz.end(), r[cs]) - t.shift_thz.begin());
                t.gain[pi * t.shift_thz.size() + si] = r[cg];
            }
            for (double g : t.gain)
                if (std::isnan(g)) throw ConfigError(fpath, "Raman table is not a full pump x shift grid");
        } else {
            if (!j.contains("pump_thz") || !j.contains("shift_thz") || !j.contains("gain"))
                throw ConfigError(path, "measured Raman model needs 'file' or pump_thz, shift_thz and gain");
            t.pump_thz = number_array(j.at("pump_thz"), child(path, "pump_thz"));
            t.shift_thz = number_array(j.at("shift_thz"), child(path, "shift_thz"));
            const auto& g = j.at("gain");
            const auto gp = child(path, "gain");
            if (!g.is_array() || g.size() != t.pump_thz.size())
                throw ConfigError(gp, "expected one row per pump frequency");
            for (std::size_t r = 0; r < g.size(); ++r) {
                auto row = number_array(g[r], child(gp, r));
                if (row.size() != t.shift_thz.size()) throw ConfigError(child(gp, r), "expected one value per shift");
                t.gain.insert(t.gain.end(), row.begin(), row.end());
            }
        }
        m.form = std::move(t);
    } else {
        throw ConfigError(child(path, "model"), "expected 'parametric' or 'measured'");
    }
    try {
        validate(m);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return m;
}

inline FiberSpec parse_fiber(const json& j, const std::string& path, const std::filesystem::path& base) {
    check_keys(j, path, {"length_km", "loss_db_per_km", "loss_file", "beta2_ps2_per_km", "beta3_ps3_per_km",
                         "beta4_ps4_per_km", "reference_frequency_thz", "n2_m2_per_w", "effective_area", "raman"});
    FiberSpec f;
    f.length_km = number_at(j, path, "length_km", f.length_km);
    if (j.contains("loss_db_per_km") && j.contains("loss_file"))
        throw ConfigError(path, "give loss_db_per_km or loss_file, not both");
    if (j.contains("loss_db_per_km")) {
        const auto& l = j.at("loss_db_per_km");
        const auto lp = child(path, "loss_db_per_km");
        if (l.is_number()) {
            const double v = number(l, lp);
            f.loss_db_per_km = LinearTable({kFlatLossLow, kFlatLossHigh}, {v, v});
        } else {
            f.loss_db_per_km = pair_table(l, lp);
        }
    } else if (j.contains("loss_file")) {
        const auto lp = child(path, "loss_file");
        const auto tab = read_delimited(resolve(base, string_at(j, path, "loss_file", "")), lp);
        const auto cf = tab.column("frequency_thz", lp), cl = tab.column("loss_db_per_km", lp);
        std::vector<double> x, y;
        for (const auto& r : tab.rows) {
            x.push_back(r[cf]);
            y.push_back(r[cl]);
        }
        try {
            f.loss_db_per_km = LinearTable(std::move(x), std::move(y));
        } catch (const Error& e) {
            throw ConfigError(lp, e.what());
        }
    }
    // A document that sets any dispersion coefficient owns the whole
    // expansion: omitted orders are 0 rather than the built-in SMF values.
    if (j.contains("beta2_ps2_per_km") || j.contains("beta3_ps3_per_km") || j.contains("beta4_ps4_per_km")) {
        f.beta2 = number_at(j, path, "beta2_ps2_per_km", 0.0);
        f.beta3 = number_at(j, path, "beta3_ps3_per_km", 0.0);
        f.beta4 = number_at(j, path, "beta4_ps4_per_km", 0.0);
    }
    f.reference_frequency_thz = number_at(j, path, "reference_frequency_thz", f.reference_frequency_thz);
    f.n2 = number_at(j, path, "n2_m2_per_w", f.n2);
    if (j.contains("effective_area")) {
        const auto& a = j.at("effective_area");
        const auto ap = child(path, "effective_area");
        require_object(a, ap);
        if (a.contains("table")) {
            check_keys(a, ap, {"table"});
            f.effective_area = pair_table(a.at("table"), child(ap, "table"));
        } else {
            check_keys(a, ap, {"numerical_aperture", "core_radius_um"});
            MarcuseParams m;
            m.numerical_aperture = number_at(a, ap, "numerical_aperture", m.numerical_aperture);
            m.core_radius_um = number_at(a, ap, "core_radius_um", m.core_radius_um);
            f.effective_area = m;
        }
    }
    if (j.contains("raman")) f.raman = parse_raman(j.at("raman"), child(path, "raman"), base);
    try {
        validate(f);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return f;
}

inline AmplifierSpec parse_amplifier(const json& j, const std::string& path) {
    check_keys(j, path, {"noise_figure_db"});
    AmplifierSpec a = AmplifierSpec::case_study_default();
    if (j.contains("noise_figure_db")) {
        const auto& nf = j.at("noise_figure_db");
        const auto np = child(path, "noise_figure_db");
        require_object(nf, np);
        a.noise_figure_db.clear();
        for (auto it = nf.begin(); it != nf.end(); ++it) {
            auto b = parse_band_label(it.key());
            if (!b) throw ConfigError(child(np, it.key()), "unknown band");
            a.noise_figure_db[*b] = number(it.value(), child(np, it.key()));
        }
    }
    return a;
}

inline CombGrid parse_grid(const json& j, const std::string& path) {
    check_keys(j, path, {"anchor_thz", "spacing_ghz", "symbol_rate_gbaud", "launch_power_w", "launch_power_dbm",
                         "format", "fill_order", "fill_count"});
    CombGrid g;
    g.anchor_thz = number_at(j, path, "anchor_thz", g.anchor_thz);
    g.spacing_ghz = number_at(j, path, "spacing_ghz", g.spacing_ghz);
    g.symbol_rate_gbaud = number_at(j, path, "symbol_rate_gbaud", g.symbol_rate_gbaud);
    g.launch_power_w = power_w(j, path, g.launch_power_w, false);
    g.format = format_at(j, path, g.format);
    if (j.contains("fill_order")) {
        const auto& fo = j.at("fill_order");
        const auto fp = child(path, "fill_order");
        if (!fo.is_array() || fo.empty()) throw ConfigError(fp, "expected a non-empty array of band labels");
        g.fill_order.clear();
        for (std::size_t i = 0; i < fo.size(); ++i) g.fill_order.push_back(band_label(fo[i], child(fp, i)));
    }
    if (!(g.spacing_ghz > 0.0)) throw ConfigError(child(path, "spacing_ghz"), "must be > 0");
    if (!(g.symbol_rate_gbaud > 0.0)) throw ConfigError(child(path, "symbol_rate_gbaud"), "must be > 0");
    return g;
}

inline TransceiverCurve parse_transceiver(const json& j, const std::string& path) {
    check_keys(j, path, {"knots"});
    TransceiverCurve c;
    if (!j.contains("knots")) return TransceiverCurve::default_curve();
    const auto t = pair_table(j.at("knots"), child(path, "knots"));
    for (std::size_t i = 0; i < t.xs().size(); ++i) c.knots.emplace_back(t.xs()[i], t.ys()[i]);
    try {
        validate(c);
    } catch (const Error& e) {
        throw ConfigError(child(path, "knots"), e.what());
    }
    return c;
}

inline OptimizerSettings parse_optimizer(const json& j, const std::string& path) {
    check_keys(j, path, {"power_min_dbm", "power_max_dbm", "max_evaluations", "initial_step_db", "min_step_db",
                         "min_relative_improvement", "mode", "sweep_increment"});
    OptimizerSettings o;
    o.power_min_dbm = number_at(j, path, "power_min_dbm", o.power_min_dbm);
    o.power_max_dbm = number_at(j, path, "power_max_dbm", o.power_max_dbm);
    o.max_evaluations = integer_at(j, path, "max_evaluations", o.max_evaluations);
    o.initial_step_db = number_at(j, path, "initial_step_db", o.initial_step_db);
    o.min_step_db = number_at(j, path, "min_step_db", o.min_step_db);
    o.min_relative_improvement = number_at(j, path, "min_relative_improvement", o.min_relative_improvement);
    const auto mode = string_at(j, path, "mode", "joint");
    if (mode == "joint")
        o.mode = OptimizerMode::Joint;
    else if (mode == "band-by-band")
        o.mode = OptimizerMode::BandByBand;
    else
        throw ConfigError(child(path, "mode"), "expected 'joint' or 'band-by-band'");
    o.sweep_increment = integer_at(j, path, "sweep_increment", o.sweep_increment);
    return o;
}

inline SolverSettings parse_solver(const json& j, const std::string& path) {
    check_keys(j, path, {"ode_step_km", "fit_samples", "series_cap", "step_tolerance", "sigma_min", "sigma_max",
                         "sigma_tolerance", "dispersion_floor_ps2_per_km"});
    SolverSettings s;
    s.ode_step_km = number_at(j, path, "ode_step_km", s.ode_step_km);
    s.fit_samples = integer_at(j, path, "fit_samples", s.fit_samples);
    s.series_cap = integer_at(j, path, "series_cap", s.series_cap);
    s.step_tolerance = number_at(j, path, "step_tolerance", s.step_tolerance);
    s.sigma_min = number_at(j, path, "sigma_min", s.sigma_min);
    s.sigma_max = number_at(j, path, "sigma_max", s.sigma_max);
    s.sigma_tolerance = number_at(j, path, "sigma_tolerance", s.sigma_tolerance);
    s.dispersion_floor = number_at(j, path, "dispersion_floor_ps2_per_km", s.dispersion_floor);
    return s;
}

// --- serialize --------------------------------------------------------------

inline json fiber_json(const FiberSpec& f) {
    json j;
    j["length_km"] = f.length_km;
    j["loss_db_per_km"] = table_json(f.loss_db_per_km);
    j["beta2_ps2_per_km"] = f.beta2;
    j["beta3_ps3_per_km"] = f.beta3;
    j["beta4_ps4_per_km"] = f.beta4;
    j["reference_frequency_thz"] = f.reference_frequency_thz;
    j["n2_m2_per_w"] = f.n2;
    if (const auto* m = std::get_if<MarcuseParams>(&f.effective_area))
        j["effective_area"] = {{"numerical_aperture", m->numerical_aperture}, {"core_radius_um", m->core_radius_um}};
    else
        j["effective_area"] = {{"table", table_json(std::get<LinearTable>(f.effective_area))}};
    json r;
    r["scaling"] = f.raman.scaling == RamanScaling::LinearInPump ? "linear-in-pump" : "none";
    if (const auto* p = std::get_if<RamanModel::Parametric>(&f.raman.form)) {
        r["model"] = "parametric";
        r["peak_value"] = p->peak_value;
        r["peak_shift_thz"] = p->peak_shift_thz;
        r["reference_pump_thz"] = p->reference_pump_thz;
    } else {
        const auto& t = std::get<RamanModel::Measured>(f.raman.form);
        r["model"] = "measured";
        r["pump_thz"] = t.pump_thz;
        r["shift_thz"] = t.shift_thz;
        json rows = json::array();
        for (std::size_t i = 0; i < t.pump_thz.size(); ++i)
            rows.push_back(std::vector<double>(t.gain.begin() + static_cast<long>(i * t.shift_thz.size()),
                                               t.gain.begin() + static_cast<long>((i + 1) * t.shift_thz.size())));
        r["gain"] = rows;
    }
    j["raman"] = r;
    return j;
}

inline json amplifier_json(const AmplifierSpec& a) {
    json nf = json::object();
    for (const auto& [b, v] : a.noise_figure_db) nf[std::string(to_string(b))] = v;
    return {{"noise_figure_db", nf}};
}

} // namespace io_detail

/// Parse a scenario document. Relative file references are resolved against
/// `base_dir`. Throws ConfigError with a JSON-pointer path on schema errors
/// and InvariantError for physically invalid scenarios.
inline Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".") {
    using namespace io_detail;
    check_keys(doc, "", {"spans", "bands", "channels", "grid", "transceiver", "optimizer", "solver"});
    Scenario s;
    if (doc.contains("bands")) {
        const auto& b = doc.at("bands");
        if (!b.is_array()) throw ConfigError("/bands", "expected an array");
        s.bands.clear();
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto p = child("/bands", i);
            check_keys(b[i], p, {"label", "lower_thz", "upper_thz"});
            if (!b[i].contains("label") || !b[i].contains("lower_thz") || !b[i].contains("upper_thz"))
                throw ConfigError(p, "band needs label, lower_thz and upper_thz");
            s.bands.push_back(Band{band_label(b[i].at("label"), child(p, "label")),
                                   number(b[i].at("lower_thz"), child(p, "lower_thz")),
                                   number(b[i].at("upper_thz"), child(p, "upper_thz"))});
        }
    }

    if (!doc.contains("spans")) throw ConfigError("/spans", "missing");
    const auto& spans = doc.at("spans");
    if (!spans.is_array()) throw ConfigError("/spans", "expected an array");
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto p = child("/spans", i);
        check_keys(spans[i], p, {"repeat", "fiber", "amplifier"});
        const int repeat = integer_at(spans[i], p, "repeat", 1);
        if (repeat < 1) throw ConfigError(child(p, "repeat"), "must be >= 1");
        Span sp;
        if (spans[i].contains("fiber")) sp.fiber = parse_fiber(spans[i].at("fiber"), child(p, "fiber"), base_dir);
        if (spans[i].contains("amplifier")) sp.amplifier = parse_amplifier(spans[i].at("amplifier"), child(p, "amplifier"));
        for (int r = 0; r < repeat; ++r) s.spans.push_back(sp);
    }

    if (doc.contains("grid")) s.grid = parse_grid(doc.at("grid"), "/grid");
    if (doc.contains("channels")) {
        const auto& ch = doc.at("channels");
        if (!ch.is_array()) throw ConfigError("/channels", "expected an array");
        for (std::size_t i = 0; i < ch.size(); ++i) {
            const auto p = child("/channels", i);
            check_keys(ch[i], p, {"frequency_thz", "symbol_rate_gbaud", "launch_power_w", "launch_power_dbm", "format"});
            if (!ch[i].contains("frequency_thz")) throw ConfigError(p, "missing frequency_thz");
            Channel c;
            c.index = i + 1;
            c.frequency_thz = number(ch[i].at("frequency_thz"), child(p, "frequency_thz"));
            c.symbol_rate_gbaud = number_at(ch[i], p, "symbol_rate_gbaud", s.grid ? s.grid->symbol_rate_gbaud : 64.0);
            const double w = power_w(ch[i], p, s.grid ? std::optional<double>(s.grid->launch_power_w) : std::nullopt, false);
            if (w >= 0.0) c.launch_power_w = w;
            c.format = format_at(ch[i], p, s.grid ? s.grid->format : ModulationFormat::Gaussian);
            s.channels.push_back(c);
        }
    }
    if (doc.contains("grid") && doc.at("grid").contains("fill_count")) {
        if (doc.contains("channels")) throw ConfigError("/grid/fill_count", "cannot be combined with explicit channels");
        const int count = integer_at(doc.at("grid"), "/grid", "fill_count", 0);
        const auto seq = fill_sequence(*s.grid, s.bands);
        if (count < 1 || static_cast<std::size_t>(count) > seq.size())
            throw ConfigError("/grid/fill_count", "must be between 1 and " + std::to_string(seq.size()));
        s.channels = comb_from_slots(*s.grid, std::span<const FillSlot>(seq.data(), static_cast<std::size_t>(count)));
    }
    if (s.channels.empty()) throw ConfigError("/channels", "scenario defines no channels (give channels or grid.fill_count)");

    if (doc.contains("transceiver")) s.transceiver = parse_transceiver(doc.at("transceiver"), "/transceiver");
    if (doc.contains("optimizer")) s.optimizer = parse_optimizer(doc.at("optimizer"), "/optimizer");
    if (doc.contains("solver")) s.solver = parse_solver(doc.at("solver"), "/solver");
    validate(s);
    return s;
}

inline Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = ".") {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_scenario(doc, base_dir);
}

inline Scenario load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("", "cannot open scenario file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), file.parent_path().empty() ? std::filesystem::path(".") : file.parent_path());
}

/// Canonical JSON form: sorted keys, explicit tables, consecutive identical
/// spans folded into `repeat`.
inline nlohmann::json scenario_json(const Scenario& s) {
    using namespace io_detail;
    json doc;
    json spans = json::array();
    for (std::size_t i = 0; i < s.spans.size();) {
        std::size_t j = i + 1;
        while (j < s.spans.size() && s.spans[j] == s.spans[i]) ++j;
        json sp = {{"fiber", fiber_json(s.spans[i].fiber)}, {"amplifier", amplifier_json(s.spans[i].amplifier)}};
        sp["repeat"] = j - i;
        spans.push_back(sp);
        i = j;
    }
    doc["spans"] = spans;
    json bands = json::array();
    for (const auto& b : s.bands)
        bands.push_back({{"label", std::string(to_string(b.label))}, {"lower_thz", b.lower_thz}, {"upper_thz", b.upper_thz}});
    doc["bands"] = bands;
    json ch = json::array();
    for (const auto& c : s.channels) {
        json cj = {{"frequency_thz", c.frequency_thz}, {"symbol_rate_gbaud", c.symbol_rate_gbaud},
                   {"format", std::string(to_string(c.format))}};
        if (c.launch_power_w) cj["launch_power_w"] = *c.launch_power_w;
        ch.push_back(cj);
    }
    doc["channels"] = ch;
    if (s.grid) {
        json fo = json::array();
        for (auto b : s.grid->fill_order) fo.push_back(std::string(to_string(b)));
        doc["grid"] = {{"anchor_thz", s.grid->anchor_thz},         {"spacing_ghz", s.grid->spacing_ghz},
                       {"symbol_rate_gbaud", s.grid->symbol_rate_gbaud}, {"launch_power_w", s.grid->launch_power_w},
                       {"format", std::string(to_string(s.grid->format))}, {"fill_order", fo}};
    }
    json knots = json::array();
    for (const auto& [g, r] : s.transceiver.knots) knots.push_back(json::array({g, r}));
    doc["transceiver"] = {{"knots", knots}};
    const auto& o = s.optimizer;
    doc["optimizer"] = {{"power_min_dbm", o.power_min_dbm},
                        {"power_max_dbm", o.power_max_dbm},
                        {"max_evaluations", o.max_evaluations},
                        {"initial_step_db", o.initial_step_db},
                        {"min_step_db", o.min_step_db},
                        {"min_relative_improvement", o.min_relative_improvement},
                        {"mode", o.mode == OptimizerMode::Joint ? "joint" : "band-by-band"},
                        {"sweep_increment", o.sweep_increment}};
    const auto& v = s.solver;
    doc["solver"] = {{"ode_step_km", v.ode_step_km},         {"fit_samples", v.fit_samples},
                     {"series_cap", v.series_cap},           {"step_tolerance", v.step_tolerance},
                     {"sigma_min", v.sigma_min},             {"sigma_max", v.sigma_max},
                     {"sigma_tolerance", v.sigma_tolerance}, {"dispersion_floor_ps2_per_km", v.dispersion_floor}};
    return doc;
}

inline std::string serialize_scenario(const Scenario& s, int indent = 2) { return scenario_json(s).dump(indent); }

} // namespace uwbnli
