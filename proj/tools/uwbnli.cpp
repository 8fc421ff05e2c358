// Command-line front end: runs one pipeline stage on a scenario file and
// writes CSV or JSON tables.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <CLI11.hpp>

#include "uwbnli/uwbnli.hpp"

namespace fs = std::filesystem;
using namespace uwbnli;

namespace {

constexpr std::array<std::string_view, 7> kSubcommands = {"propagate", "fit",      "nli",     "report",
                                                          "optimize",  "sweep", "validate"};
constexpr std::array<std::string_view, 7> kDescriptions = {
    "Per-span power profiles from the coupled Raman equations",
    "Fitted loss parameters per channel and span",
    "Closed-form NLI per channel and span",
    "Per-channel OSNR, GOSNR and information rate at the receiver",
    "Optimize launch powers and write the policy and final report",
    "Fill bands channel by channel, optimizing at each step",
    "Compare the closed form against the integral oracle (small combs)"};

struct Options {
    std::string scenario;
    std::string out_dir;
    unsigned threads = 1;
    std::optional<double> ode_step_m;
    std::optional<int> series_cap;
    std::optional<long long> seed;
    std::string format = "csv";
    std::optional<int> increment;
    std::optional<int> max_channels;
};

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '"', '\'');
    return s;
}

void print_error(const char* kind, const std::string& path, const std::string& message) {
    std::cerr << "uwbnli: error kind=" << kind;
    if (!path.empty()) std::cerr << " path=" << path;
    std::cerr << " message=\"" << one_line(message) << "\"\n";
}

class Output {
public:
    Output(const Options& o, OutputFormat f) : dir_(o.out_dir), format_(f) {
        if (!dir_.empty()) fs::create_directories(dir_);
    }

    void write(const std::string& stem, const Metadata& m, const Table& t) {
        if (dir_.empty()) {
            if (count_++ > 0) std::cout << '\n';
            write_table(std::cout, format_, m, t);
            return;
        }
        const fs::path file = fs::path(dir_) / (stem + (format_ == OutputFormat::Csv ? ".csv" : ".json"));
        std::ofstream os(file);
        if (!os) throw Error("cannot write " + file.string());
        write_table(os, format_, m, t);
    }

private:
    std::string dir_;
    OutputFormat format_;
    int count_ = 0;
};

void warn_series(const LinkReport& r) {
    for (std::size_t i = 0; i < r.spans.size(); ++i)
        if (r.spans[i].series_capped) {
            std::cerr << "uwbnli: warning: series order capped at " << r.spans[i].series_order << " in span " << i + 1
                      << '\n';
            return;
        }
}

int run(const std::string& cmd, const Options& o) {
    Scenario s = load_scenario(o.scenario);
    if (o.ode_step_m) s.solver.ode_step_km = *o.ode_step_m * 1e-3;
    if (o.series_cap) s.solver.series_cap = *o.series_cap;
    validate(s.solver);
    const OutputFormat fmt = o.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
    Output out(o, fmt);
    Metadata meta = standard_metadata(s, cmd);
    if (o.seed) meta.add("seed", std::to_string(*o.seed) + " (reserved, no stochastic stage)");

    if (cmd == "propagate" || cmd == "fit" || cmd == "nli" || cmd == "report") {
        LinkTrace trace;
        LinkOptions lo;
        lo.threads = o.threads;
        lo.trace = cmd == "report" ? nullptr : &trace;
        const auto report = evaluate_link(s, lo);
        warn_series(report);
        if (cmd == "propagate") out.write("profiles", meta, profile_table(trace, s));
        if (cmd == "fit") out.write("fits", meta, fit_table(trace, s));
        if (cmd == "nli") out.write("nli", meta, nli_table(trace, s));
        if (cmd == "report") out.write("report", meta, report_table(report));
        return 0;
    }
    if (cmd == "optimize") {
        OptimizeOptions oo;
        oo.threads = o.threads;
        const auto r = optimize_launch(s, oo);
        warn_series(r.report);
        meta.add("optimizer", std::string(s.optimizer.mode == OptimizerMode::Joint ? "joint" : "band-by-band") +
                                  " compass search, evaluations=" + std::to_string(r.evaluations));
        out.write("policy", meta, policy_table(r.policy, s));
        out.write("report", meta, report_table(r.report));
        return 0;
    }
    if (cmd == "sweep") {
        SweepOptions so;
        so.threads = o.threads;
        so.max_channels = o.max_channels ? static_cast<std::size_t>(std::max(0, *o.max_channels)) : 0;
        const int inc = o.increment.value_or(s.optimizer.sweep_increment);
        if (inc < 1) throw InvariantError("sweep increment must be >= 1");
        const auto steps = band_fill_sweep(s, static_cast<std::size_t>(inc), so);
        meta.add("sweep", "increment=" + std::to_string(inc) +
                              " steps clipped at band completion; each step warm-starts from the previous policy");
        out.write("sweep", meta, sweep_table(steps));
        return 0;
    }
    // validate
    out.write("validation", meta, validation_table(validate_against_oracle(s)));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ultra-wideband closed-form NLI and link-budget tool"};
    app.set_version_flag("--version", std::string(kToolVersion));
    Options o;
    std::string cmd;
    for (std::size_t k = 0; k < kSubcommands.size(); ++k) {
        const auto name = kSubcommands[k];
        auto* sub = app.add_subcommand(std::string(name), std::string(kDescriptions[k]));
        sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out_dir, "Output directory (default: stdout)");
        sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 256u));
        sub->add_option("--ode-step", o.ode_step_m, "ODE step in meters")->check(CLI::PositiveNumber);
        sub->add_option("--series-cap", o.series_cap, "Cap on the series order M")->check(CLI::Range(1, 1000));
        sub->add_option("--seed", o.seed, "Reserved");
        sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        if (name == "sweep") {
            sub->add_option("--increment", o.increment, "Channels added per step");
            sub->add_option("--max-channels", o.max_channels, "Stop after this many channels");
        }
        sub->callback([&cmd, name] { cmd = std::string(name); });
    }
    app.require_subcommand(1);

    if (argc > 1) {
        const std::string_view first = argv[1];
        const bool known = std::find(kSubcommands.begin(), kSubcommands.end(), first) != kSubcommands.end();
        if (!known && !first.starts_with("-")) {
            std::cerr << app.help();
            print_error("usage", "", "unknown subcommand '" + std::string(first) + "'");
            return 2;
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help();
        print_error("usage", "", e.what());
        return 2;
    }

    try {
        return run(cmd, o);
    } catch (const ConfigError& e) {
        print_error(e.kind(), e.path(), e.what());
    } catch (const Error& e) {
        print_error(e.kind(), "", e.what());
    } catch (const nlohmann::json::exception& e) {
        print_error("config", "", e.what());
    } catch (const std::exception& e) {
        print_error("internal", "", e.what());
    }
    return 1;
}
